"""Reference values frozen into the C++ tests (mpmath, 30 digits)."""
import mpmath as mp

mp.mp.dps = 30
xs = [0.1, 0.5, 1.0, 2.0, 5.0]


def show(name, vals):
    print(f"// {name}")
    print("{" + ", ".join(mp.nstr(v, 17) for v in vals) + "}")


print("log_gamma")
for z in [mp.mpc(0.5, 2), mp.mpc(-2.5, 0.3), mp.mpc(4.85, 0), mp.mpc(0.1, -7)]:
    v = mp.loggamma(z)
    print(z, mp.nstr(v.real, 17), mp.nstr(v.imag, 17))
print("lgamma(-2.5)", mp.nstr(mp.log(abs(mp.gamma(-2.5))), 17), mp.sign(mp.gamma(-2.5)))

show("G20_02(x | ; 0.3, 1.1)", [mp.meijerg([[], []], [[0.3, 1.1], []], x) for x in xs])
show("G12_22(x | 1,1; 1,0) = ln(1+x)", [mp.meijerg([[1, 1], []], [[1], [0]], x) for x in xs])
show("G20_12(x | 1; 0, 1/2) = sqrt(pi) erfc(sqrt x)", [mp.meijerg([[], [1]], [[0, 0.5], []], x) for x in xs])
show("G11_11(x | 0; 0) = 1/(1+x)", [mp.meijerg([[0], []], [[0], []], x) for x in xs])
show("H10_01(x | (0.5, 2)) = x^(1/4) exp(-sqrt x) / 2", [0.5 * x ** 0.25 * mp.exp(-mp.sqrt(x)) for x in xs])
show("Exp(1) + Exp(1) cdf", [1 - mp.exp(-x) * (1 + x) for x in xs])

# pointing: w_z / a_r = 10
ups = mp.sqrt(mp.pi / 2) * mp.mpf("0.1") / 1
a0 = mp.erf(ups) ** 2
print("upsilon", mp.nstr(ups, 17), "A0", mp.nstr(a0, 17))
print("fog moment k=2 v=0.331 r=1", mp.nstr((mp.mpf("0.331") / mp.mpf("1.331")) ** 2, 17))

# Gamma-Gamma with pointing errors: alpha=3.01, beta=3, rho^2=2.25, A0 from w_z/a_r=15
al, be, r2 = mp.mpf("3.01"), mp.mpf(3), mp.mpf("2.25")
A0 = mp.erf(mp.sqrt(mp.pi / 2) / 15) ** 2
print("A0(15)", mp.nstr(A0, 17))
c = al * be / A0
hs = [A0 * f for f in (0.01, 0.1, 0.3, 0.6, 1.0)]
show("GG+pointing pdf", [al * be * r2 / (A0 * mp.gamma(al) * mp.gamma(be)) *
                         mp.meijerg([[], [r2]], [[r2 - 1, al - 1, be - 1], []], c * h) for h in hs])
show("GG+pointing cdf", [r2 / (mp.gamma(al) * mp.gamma(be)) *
                         mp.meijerg([[1], [r2 + 1]], [[r2, al, be], [0]], c * h) for h in hs])
