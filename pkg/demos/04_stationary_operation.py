# %% [markdown]
# # Stationary operation: the smallest variance a clock can maintain
#
# A variance ``v`` is sustainable if one cycle, with its interrogation time
# chosen freely, brings the variance back to at most ``v``.  Bisection on
# ``v`` finds the smallest such value.  Entangled probes win at every
# ensemble size.

# %%
from bayesclock import stationary_variance
from bayesclock.noise import REFERENCE_WHITE

print(f"{'N':>3} {'product [Hz^2]':>15} {'optimal [Hz^2]':>15} {'t_opt [s]':>10}")
for n in (1, 2, 3, 5):
    prod, _ = stationary_variance(n, 1.0, 0.2, REFERENCE_WHITE, "product")
    opt, t = stationary_variance(n, 1.0, 0.2, REFERENCE_WHITE, "optimal")
    print(f"{n:3d} {prod:15.5f} {opt:15.5f} {t:10.3f}")

# %% [markdown]
# The phase/detuning correlation ``K1`` comes in two forms.  The default
# keeps the initial offset undamped and reproduces the 0.167 Hz^2 value for
# five atoms.  ``k1_form="covariance"`` is the exact time average of the
# noise two-point function (what trajectory sampling measures).  It gives a
# larger stationary variance.

# %%
for form in ("undecayed_offset", "covariance"):
    v, t = stationary_variance(5, 1.0, 0.2, REFERENCE_WHITE, "optimal", k1_form=form)
    print(f"{form:>17}: {v:.4f} Hz^2 at t = {t:.3f} s")
