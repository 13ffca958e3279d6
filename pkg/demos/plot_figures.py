# %% [markdown]
# # Regenerating the figure data
#
# The CLI writes each sweep to CSV plus a JSON manifest; this script runs the
# same sweeps in-process and draws them. Needs matplotlib, which the package
# itself does not depend on.

# %%
import math

import numpy as np

from qmfs_readout import sweeps

try:
    import matplotlib.pyplot as plt
except ImportError:  # still print the tables
    plt = None


def columns(header, rows):
    return {h: np.array([row[i] for row in rows]) for i, h in enumerate(header)}


# %% [markdown]
# ## SNR against integration time, e^{2r} = 100

# %%
a = columns(*sweeps.fig3a(np.linspace(0.25, 10, 40)))
if plt:
    fig, ax = plt.subplots()
    for key in ("snr_coherent", "snr_single_opt", "snr_qmfs"):
        ax.plot(a["kappa_tau"], a[key], label=key[4:])
    ax.set(xlabel=r"$\kappa\tau$", ylabel="SNR")
    ax.legend()

# %% [markdown]
# ## Time to reach F = 0.9999 with n_bar0 = 100
#
# With 10% detection loss the curve flattens out near e^{2r} ~ 10^3.

# %%
b = columns(*sweeps.fig3b(np.geomspace(1, 1e4, 30)))
print("e2r >= 1e3:", b["kappa_tau_qmfs_eta0.9"][b["e2r"] >= 1e3])
if plt:
    fig, ax = plt.subplots()
    for key, v in b.items():
        if key != "e2r":
            ax.semilogx(b["e2r"], v, label=key)
    ax.set(xlabel=r"$e^{2r}$", ylabel=r"$\kappa\tau$")
    ax.legend()

# %% [markdown]
# ## Photons for F = 0.9999

# %%
c = columns(*sweeps.fig3c(np.geomspace(0.5, 20, 20)))
if plt:
    fig, ax = plt.subplots()
    for key, v in c.items():
        if key.startswith("nbar"):
            ax.loglog(c["kappa_tau"], v, label=key)
    ax.set(xlabel=r"$\kappa\tau$", ylabel=r"$\bar n$")
    ax.legend()

# %% [markdown]
# ## Coupling asymmetry and the transmon shifts

# %%
d = columns(*sweeps.fig4a(np.linspace(0, 0.3, 16)))
e = columns(*sweeps.fig4b(np.linspace(0.2, 0.6, 81)))
if plt:
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(9, 3.5))
    for key, v in d.items():
        if key.startswith("enhancement"):
            ax1.plot(d["dchi_over_chibar"], v, label=key)
    ax1.axhline(10, color="k", lw=0.5)
    ax1.set(xlabel=r"$\delta\chi/\bar\chi$", ylabel="SNR enhancement")
    ax1.legend(fontsize=7)
    ax2.plot(e["E_C_GHz"], 1e3 * e["chi_1_GHz"], label=r"$\chi_1$")
    ax2.plot(e["E_C_GHz"], 1e3 * e["chi_2_GHz"], label=r"$\chi_2$")
    ax2.set(xlabel=r"$E_C$ (GHz)", ylabel=r"$\chi$ (MHz)", ylim=(-20, 20))
    ax2.legend()
    plt.show()
else:
    print(f"max enhancement at dchi/chibar=0.2: "
          f"{d['enhancement_optimized'][np.argmin(abs(d['dchi_over_chibar'] - 0.2))]:.3f}")
    print(f"{np.isnan(e['chi_2_GHz']).sum()} ambiguous points in the E_C scan; "
          f"e^r = {math.sqrt(100):g}")
