"""Quantum-Zeno phase locking for atomic clocks, at desk scale.

Subpackages:

- ``hilbert``: tensor-product state machinery and exact evolution
- ``dephasing``: ensemble frequency statistics and coherence envelopes
- ``zeno_two_level``: two-atom Zeno phase-locking protocol
- ``zeno_multilevel``: three-level defect and four-level protocol
- ``readout``: clock-phase readout chain and field-emission model
- ``cli``: configuration-driven runs with CSV/SVG emission
"""

__version__ = "0.1.0"
