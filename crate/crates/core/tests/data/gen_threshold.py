# Symbolic coefficients of the massless 2D threshold kernel and the 3D static kernel.
# Each kernel is written as sum_k c_k alpha_k (+ scalar parts for n = 3);
# this prints c_k at a few lattice offsets.
import sympy as sp

x, y, z, m = sp.symbols("x y z m", real=True)

def coeffs2(u):
    g = -sp.log(sp.sqrt(x**2 + y**2)) / (2 * sp.pi)
    out = [-sp.I * sp.diff(g, v) for v in (x, y)]
    return [complex(sp.N(c.subs({x: u[0], y: u[1]}), 30)) for c in out]

def coeffs3(u):
    g = 1 / (4 * sp.pi * sp.sqrt(x**2 + y**2 + z**2))
    out = [-sp.I * sp.diff(g, v) for v in (x, y, z)]
    sub = {x: u[0], y: u[1], z: u[2]}
    return [complex(sp.N(c.subs(sub), 30)) for c in out] + [float(sp.N(g.subs(sub), 30))]

for u in [(1.0, 0.0), (0.5, -1.5), (-2.0, 1.0)]:
    print("n2", *u, *(f"{c.real:.17e} {c.imag:.17e}" for c in coeffs2(u)))
for u in [(1.0, 0.0, 0.0), (0.5, -1.0, 1.5)]:
    r = coeffs3(u)
    print("n3", *u, *(f"{c.real:.17e} {c.imag:.17e}" for c in r[:3]), f"{r[3]:.17e}")
