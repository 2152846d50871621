"""States, channels, and process matrices.

Build the polarization-entangled pair, push its buffered qubit through a few
standard decoherence channels, and look at the resulting process matrices and
figures of merit.
"""

import numpy as np

from fiberloop import qstate

np.set_printoptions(precision=4, suppress=True)

rho = qstate.bell_state()
print("Prepared pair (|HH> + |VV>)/sqrt(2):")
print(rho.matrix.real)
print(f"purity      = {rho.purity:.4f}")
print(f"concurrence = {qstate.concurrence(rho):.4f}")

print("\nChi matrices in the (I, s1, s2, s3) basis (diagonals shown):")
channels = {
    "identity": qstate.identity_channel(),
    "bit flip p=0.25": qstate.bit_flip_channel(0.25),
    "phase flip p=0.5": qstate.phase_flip_channel(0.5),
    "bit-phase flip p=0.1": qstate.bit_phase_flip_channel(0.1),
    "amplitude damping g=0.2": qstate.amplitude_damping_channel(0.2),
    "phase damping l=0.1": qstate.phase_damping_channel(0.1),
    "3 dB loss": qstate.loss_channel(10 ** (-0.3)),
}
ideal = qstate.identity_chi()
for name, channel in channels.items():
    chi = qstate.channel_to_chi(channel)
    out, survival = qstate.apply_idler_channel(rho, channel)
    f_state = qstate.state_fidelity(out, rho)
    f_proc = qstate.process_fidelity(chi, ideal)
    print(
        f"  {name:24s} chi diag {np.round(chi.diagonal, 4)}  "
        f"F={f_state:.4f}  F_chi={f_proc:.4f}  survival={survival:.3f}"
    )

print("\nComposing loss, dephasing, and a phase flip:")
combined = qstate.compose_channels(
    qstate.loss_channel(0.5),
    qstate.phase_damping_channel(0.1),
    qstate.phase_flip_channel(0.01),
)
chi = qstate.channel_to_chi(combined)
print(f"  {len(combined.kraus_ops)} Kraus operators, chi diag {np.round(chi.diagonal, 4)}")
print(f"  throughput weight = {chi.weight:.3f} (the 3 dB loss, factored out)")
