"""Reference values for tests/golden.rs, computed at 40 significant digits and
rounded to the nearest double.

Run: python3 forward_depth.py
"""
from mpmath import mp, mpf, exp, log

mp.dps = 40

CASES = {
    "reference": dict(b="0.006186", c="1", thickness="75", nz=26, n=5, m_th="0.5",
                      r_max="2.5", r_min="0.025", t_dev="60", tau="0.5", s="6"),
    "steep": dict(b="0.004", c="1.4", thickness="100", nz=41, n=3, m_th="0.4",
                  r_max="4", r_min="0.05", t_dev="30", tau="0.35", s="9"),
}
INTENSITIES = ["0", "0.1", "0.25", "0.4", "0.5", "0.6", "0.75", "1", "1.3", "2"]


def depth(i, p):
    b, c, th = mpf(p["b"]), mpf(p["c"]), mpf(p["thickness"])
    nz, n, m_th = p["nz"], p["n"], mpf(p["m_th"])
    r_max, r_min, t_dev = mpf(p["r_max"]), mpf(p["r_min"]), mpf(p["t_dev"])
    a = mpf(n + 1) / (n - 1) * (1 - m_th) ** n
    dz = th / (nz - 1)
    rates = []
    for k in range(nz):
        m = exp(-c * i * exp(-b * k * dz))
        u = (1 - m) ** n
        rates.append(r_max * (a + 1) * u / (a + u) + r_min)
    t = [mpf(0)]
    for k in range(1, nz):
        t.append(t[-1] + dz / 2 * (1 / rates[k - 1] + 1 / rates[k]))
    below = [k for k in range(nz) if t[k] <= t_dev]
    if not below:
        return mpf(0)
    k = below[-1]
    if k == nz - 1:
        return mpf(1)
    f = (t_dev - t[k]) / (t[k + 1] - t[k])
    return (k + f) / (nz - 1)


def bce(d, w, tau, s):
    p = 1 / (1 + exp(-s * (d - tau)))
    return -log(p) if w else -log(1 - p)


for name, p in CASES.items():
    ds = [depth(mpf(x), p) for x in INTENSITIES]
    print(f"// {name}")
    print("depth: [" + ", ".join(repr(float(d)) for d in ds) + "]")
    # wafer: alternate cleared/uncleared
    loss = sum(bce(d, j % 2 == 0, mpf(p["tau"]), mpf(p["s"])) for j, d in enumerate(ds)) / len(ds)
    print("loss:", repr(float(loss)))
