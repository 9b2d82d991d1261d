"""Regenerate hankel_oracle.csv with mpmath at 40 significant digits."""
import mpmath

mpmath.mp.dps = 40
xs = sorted(set(
    [mpmath.mpf(10) ** (mpmath.mpf(k) / 8) for k in range(-32, 25)]
    + [mpmath.mpf(v) for v in ("7.9", "8", "8.1", "9.5", "11.99", "12", "12.01", "14.2", "100.5")]
))
with open("hankel_oracle.csv", "w", newline="\n") as f:
    f.write("x,h0_re,h0_im,h1_re,h1_im\n")
    for x in xs:
        h0 = mpmath.hankel1(0, x)
        h1 = mpmath.hankel1(1, x)
        vals = [x, h0.real, h0.imag, h1.real, h1.imag]
        f.write(",".join(mpmath.nstr(v, 20, min_fixed=0, max_fixed=0) for v in vals) + "\n")
