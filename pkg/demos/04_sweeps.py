# %% [markdown]
# # Profile size and forest size
#
# More tags give each signature more directions to differ in; longer
# profiles give more slots of evidence. The grid below runs 3-fold
# cross-validation for every (K, L) cell on paired simulation seeds.

# %%
import numpy as np

from sybiltag import evaluation as ev

rows = ev.run_sweep(ev.builtin_sweep("profile_size"))
grid = {(r["num_tags"], r["profile_length"]): r["auroc"] for r in rows}
print("AUROC   L=" + " ".join(f"{L:5d}" for L in range(2, 17)))
for K in (2, 3, 4):
    print(f"K={K}      " + " ".join(f"{grid[(K, L)]:.3f}" for L in range(2, 17)))

# %% [markdown]
# ## Trees and the sort step, tested on the colluding corpus
#
# Sorting each similarity vector turns "which slots were close" into "how
# many slots were close", which does not depend on when the colluding
# attackers happened to swap IDs.

# %%
rows = ev.run_sweep(ev.builtin_sweep("trees"))
print(" H   sort   no sort")
for H in range(5, 51, 5):
    on = next(r["accuracy"] for r in rows if r["trees"] == H and r["sort"])
    off = next(r["accuracy"] for r in rows if r["trees"] == H and not r["sort"])
    print(f"{H:2d}   {on:.3f}  {off:.3f}")
print("mean", np.mean([r["accuracy"] for r in rows if r["sort"]]).round(4),
      np.mean([r["accuracy"] for r in rows if not r["sort"]]).round(4))
