"""Coherent 50/50 splitting between the outer traps, then a check that the
split state is dark: both outer traps approach the middle one together and
the dark-state population stays near one."""
from threewell import preset
from threewell.harness import Policy, simulate

split = simulate(preset("cpt_split"), Policy())
f = split.final()
print(f"after splitting: p_L={f['p_L']:.4f} p_R={f['p_R']:.4f} "
      f"|c_L c_R*|={f['coherence']:.4f}")

dark = simulate(preset("cpt_darktest"), Policy())
w = dark.window(600, 1000)
print("during the joint approach (t = 600..1000):")
for t in (600, 700, 750, 800, 850, 900, 1000):
    a = dark.at(t)
    print(f"  t={t:5d}  p_M={a['p_M']:.4f}  p_dark={a['p_dark']:.4f}")
print(f"minimum dark-state population {dark.p_dark[w].min():.4f}")
