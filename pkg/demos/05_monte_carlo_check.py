# %% [markdown]
# # Checking the noise-averaged state against sampled trajectories
#
# The closed forms replace the random phase by a Gaussian spread with
# variance ``K2 + beta/t`` and the phase/detuning correlation by ``K1``.
# Here we sample laser trajectories directly, rotate a three-atom GHZ state
# by each sampled phase and average.  The table lists z-scores (difference
# divided by the standard error).  The first-moment row depends on which K1
# is used.

# %%
from bayesclock.oracle import consistency_report

for form in ("undecayed_offset", "covariance"):
    print(f"K1 form: {form}")
    for row in consistency_report(n_atoms=3, times=(0.2, 1.0), n_samples=30_000, k1_form=form):
        print(f"  {row['name']:<22} z = {row['z']:6.2f}  {'ok' if row['pass'] else 'MISMATCH'}")

# %% [markdown]
# ``K2``, the pointwise variance and the averaged state agree either way.
# ``K1`` and the first moment agree only with the time-averaged covariance.
