"""Offline LTE paging and broadcast signaling analysis.

Submodules:

``ltesig.uper``       UPER bit primitives
``ltesig.rrc``        Paging / MIB / SIB1 values and codec
``ltesig.pcap``       PCAP files with MAC-LTE record framing
``ltesig.analytics``  TMSI persistence statistics and reports
``ltesig.synth``      synthetic captures with ground truth
``ltesig.floodsim``   RRC connection-request flood simulator
``ltesig.cli``        command-line entry point
"""

__version__ = "0.1.0"
