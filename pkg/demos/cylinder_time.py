"""Periodic time: which solutions survive the identification t ~ t + T.

A standing wave with period 2 pi closes up; a travelling bump on a period
of 5 does not, so no time-periodic solution with that data exists.

Run: python demos/cylinder_time.py
"""

from wavelab.suites import cylinder_demo

for label, traveling in (("standing wave, T = 2 pi", False), ("travelling bump, T = 5", True)):
    rep = cylinder_demo(256, traveling)
    print(f"{label:26s} periodicity defect {rep['relative_defect']:.3e}")
