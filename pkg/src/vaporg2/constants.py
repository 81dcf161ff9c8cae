"""Units, physical constants and sign conventions used throughout the package.

Internal units
--------------
* rates and frequencies are in units of the single-atom decay constant Gamma
  (Gamma = 1), times in 1/Gamma;
* lengths are in units of the transition wavelength lambda (lambda = 1), so
  the resonant wavenumber is k0 = 2*pi.

Dissipator normalization
------------------------
The two-atom master equation is taken in the form

    d rho/dt = -i[H, rho]
               - sum_ij gamma_ij (s_i^+ s_j^- rho + rho s_i^+ s_j^- - 2 s_j^- rho s_i^+)

with gamma_11 = gamma_22 = Gamma = 1.  An isolated excited atom therefore
decays at 2*Gamma and its optical coherence at Gamma, which is the convention
behind the fifteen moment equations in :mod:`vaporg2.dynamics` (the population
equation carries ``-2 S5``).  The alternative normalization with a factor 1/2
in front of the dissipator is *not* used.

Rotating-frame Hamiltonian
--------------------------
    H = -sum_i Delta_i s_i^+ s_i^-
        + g12 (s_1^+ s_2^- + s_2^+ s_1^-)
        - 1/2 sum_i (Omega_i s_i^+ + Omega_i^* s_i^-)

The detuning enters with exactly the sign that reproduces the moment
equations (``dS1/dt`` contains ``-(1 + i Delta_1) S1``); no statement is made
about whether Delta means omega_L - omega_0 or the reverse.

Vectorization (oracle)
----------------------
Density matrices are flattened row-major, ``vec(rho)[4a + b] = rho[a, b]``,
on the product basis ``|gg>, |ge>, |eg>, |ee>`` (atom 1 is the left factor).
With this stacking ``vec(A rho B) = kron(A, B.T) @ vec(rho)`` and
``Tr(Q rho) = vec(Q.T) @ vec(rho)``.
"""

import math

TWO_PI = 2.0 * math.pi
K0 = TWO_PI  # resonant wavenumber in 1/lambda

BOLTZMANN = 1.380649e-23  # J/K
TORR_TO_PA = 133.323
RB87_MASS = 1.443e-25  # kg

WAVELENGTH_M = 780e-9  # Rb D2
GAMMA_MHZ = 6.0  # Gamma / 2pi in MHz
GAMMA_RAD_S = TWO_PI * GAMMA_MHZ * 1e6

# Mean distance between two independent uniform points in the unit cube.
ROBBINS_CONSTANT = 0.6617071822671762

MIN_SEPARATION = 0.01  # lambda
MIN_X = K0 * MIN_SEPARATION  # k0 * r floor accepted by the dynamics

# |g12| above which oracle comparisons use the relaxed tolerance.
STIFF_G12 = 1e3
