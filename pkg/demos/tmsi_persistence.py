"""
Do TMSIs survive between two captures?
======================================
"""

import tempfile
from pathlib import Path

from ltesig.analytics import analyze_capture, persistence_compare
from ltesig.synth import SynthModel, write_trace

tmp = Path(tempfile.mkdtemp())

# Two captures from the same MME pool share their identity space.  With the
# same seed they page the very same set of identities.
same = SynthModel(duration_min=5, tmsi_population=200, mmecs=(0x11,), rng_seed=1)
write_trace(same, tmp / "monday.pcap")
write_trace(same, tmp / "tuesday.pcap")

# A different MME code gives a disjoint key set.
other = SynthModel(duration_min=5, tmsi_population=200, mmecs=(0x22,), rng_seed=1)
write_trace(other, tmp / "elsewhere.pcap")

monday = analyze_capture(tmp / "monday.pcap")
for name in ("tuesday", "elsewhere"):
    p = persistence_compare(monday, analyze_capture(tmp / f"{name}.pcap"))
    print(f"monday vs {name}: overlap={len(p.overlap)} jaccard={p.jaccard:.3f}")
