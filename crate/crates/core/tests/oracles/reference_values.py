"""Independent reference values frozen into the Rust tests.

Run with `python3 reference_values.py`. Needs mpmath.
"""
from mpmath import mp, mpf, sqrt, log, exp

mp.dps = 40
M64 = (1 << 64) - 1


def splitmix64(state):
    while True:
        state = (state + 0x9E3779B97F4A7C15) & M64
        z = state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & M64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & M64
        yield z ^ (z >> 31)


def rotl(x, k):
    return ((x << k) | (x >> (64 - k))) & M64


def xoshiro256pp(seed):
    sm = splitmix64(seed)
    s = [next(sm) for _ in range(4)]
    while True:
        result = (rotl((s[0] + s[3]) & M64, 23) + s[0]) & M64
        t = (s[1] << 17) & M64
        s[2] ^= s[0]
        s[3] ^= s[1]
        s[1] ^= s[2]
        s[0] ^= s[3]
        s[2] ^= t
        s[3] = rotl(s[3], 45)
        yield result


def section(title):
    print(f"\n# {title}")


section("prng")
g = xoshiro256pp(0)
print("seed 0:", [next(g) for _ in range(3)])
print("seed 42 first:", next(xoshiro256pp(42)))

section("potential / bounds")
a = mpf("0.001")
ea = a - a * a / 2
print("eta sim (0.001, 1000):", sqrt(ea * log(1000)))
print("eta analysis (0.001, 1000):", sqrt(4 * ea * log(1000)))
print("eta sim (0.001, 10):", sqrt(ea * log(10)))
print("tuned hedge bound (0.001, 1000):", sqrt(log(1000) / ea))
a2 = mpf("0.01")
print("hedge bound (0.01, 10, 0.1):", log(10) / mpf("0.1") + mpf("0.1") / (4 * (a2 - a2 * a2 / 2)))
print("NH bound (0.001, 1000):", sqrt(8 * log(mpf(2320)) / a))
print("NH bound (0.1, 1):", sqrt(8 * log(mpf("2.32")) / mpf("0.1")))
print("alpha threshold N=1000:", 1 / (800 * log(mpf(2320))))
print("alpha threshold N=10:", 1 / (800 * log(mpf("23.2"))))
print("avg potential (5,-1), a=0.04:", (exp(mpf("0.04") * 25 / 8) + 1) / 2)

section("weights")
# Weight form w = R exp(alpha R^2 / 8) at alpha = 0.04, R = (1, 2, -1).
w = [r * exp(mpf("0.04") * r * r / 8) if r > 0 else mpf(0) for r in (1, 2, -1)]
print("NH weights:", [x / sum(w) for x in w])
v = [2, -1, mpf("0.5"), 2]
w = [exp(mpf("0.3") * x) for x in v]
print("softmax 0.3*(2,-1,0.5,2):", [x / sum(w) for x in w])
e = exp(1)
print("two-point softmax:", e / (e + 1), 1 / (e + 1))

section("hmm")


def two_state(stay, e1):
    stay = mpf(stay)
    t = [[stay, 1 - stay], [1 - stay, stay]]
    e = [[1 - mpf(p), mpf(p)] for p in e1]
    return t, e, [mpf("0.5"), mpf("0.5")]


def predictive_state(model, xs):
    t, e, init = model
    post = init[:]
    for x in xs:
        q = [sum(post[i] * t[i][j] for i in range(2)) for j in range(2)]
        joint = [q[j] * e[j][x] for j in range(2)]
        z = sum(joint)
        post = [v / z for v in joint]
    return [sum(post[i] * t[i][j] for i in range(2)) for j in range(2)]


seq = [1, 1, 0, 1]
conf = predictive_state(two_state("0.9", ["0.2", "0.7"]), seq) + predictive_state(
    two_state("0.6", ["0.5", "0.95"]), seq
)
print("expert confidences after 1,1,0,1:", [mp.nstr(c, 20) for c in conf])

w = [mpf("0.5"), mpf("0.3"), mpf("0.2")]
c = [mpf("0.9"), mpf("0.4"), mpf("0.7")]
pred = [mpf("0.1"), mpf("0.8"), mpf("0.6")]
z = sum(wi * ci for wi, ci in zip(w, c))
print("aggregate fixture:", mp.nstr(sum(wi * ci * pi for wi, ci, pi in zip(w, c, pred)) / z, 20))

section("hedge five-step engine fixture (alpha 0.1, eta 0.5)")
script = [[1, -1], [mpf("0.5"), mpf("0.5")], [-1, 1], [0, 1], [1, 0]]
G = [mpf(0), mpf(0)]
R = [mpf(0), mpf(0)]
for g in script:
    e = [exp(mpf("0.5") * x) for x in G]
    p = [x / sum(e) for x in e]
    ga = sum(pi * gi for pi, gi in zip(p, g))
    G = [mpf("0.9") * x + gi for x, gi in zip(G, g)]
    R = [mpf("0.9") * r + gi - ga for r, gi in zip(R, g)]
    print("g_A", mp.nstr(ga, 20), "R", [mp.nstr(r, 20) for r in R])
