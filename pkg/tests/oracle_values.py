"""Reference values computed independently with mpmath at 40 digits.

``test_oracle_values.py`` recomputes every entry; the solver tests only
read the frozen numbers.
"""

import math

# W_S rotational seeds (n = 3): delta and rho at sample points
SEED_CASES = {
    (1, 12): {"delta": 0.78539816339744831,
              "samples": [(0.39269908169872415, 0.41421356237309505),
                          (0.70685834705770348, 0.85408068546346664)]},
    (1, 9): {"delta": 0.95531661812450928,
             "samples": [(0.47765830906225464, 0.36602540378443865),
                         (0.85978495631205835, 0.8209868943935946)]},
    (-1, 3): {"delta": 1.1462158347805888,
              "samples": [(0.57310791739029442, 0.63397459621556135),
                          (1.03159425130253, 0.94862240613090592)]},
    (-1, 0): {"delta": math.inf,
              "samples": [(0.3, 0.29131261245159091), (0.7, 0.6043677771171635)]},
    (-1, -3): {"delta": math.inf,
               "samples": [(0.3, 0.20598912370968861), (0.7, 0.42735255353018625)]},
}

# height of the upper half of the rotational spheres, phi(delta)
PHI_DELTA = {(1, 12): 0.62322524014023051, (1, 9): 0.66176802075998458,
             (-1, 3): 1.6546569199065251}

# annulus (n, eps, c, lam) = (3, 1, 12, 0.2)
ANNULUS_LAM_BAR = 0.62675660550792177
ANNULUS_PERIOD = 2.3226970876190902
ANNULUS_TAU = [(0.3, 0.77414119475005749), (0.4, 0.73264730701302092),
               (0.5, 0.79403589725529678)]

# annulus (3, -1, -3, 1)
ANNULUS_H_TAU = [(2.0, 0.47669063222878433), (30.0, 0.5)]

# hyperbolic family (n, c) = (3, -3), lambda = lambda_0 + dl, s = lambda + ds
LAMBDA_0 = 0.88137358701954303
HYPERBOLIC_RHO = {
    (0.5, 0.25): 0.86387114465628895, (0.5, 1.0): 0.73080190416442765,
    (0.5, 3.0): 0.70735707430690062, (0.1, 0.25): 0.86953372838252224,
    (0.1, 1.0): 0.7379912068725026, (0.1, 3.0): 0.70760817477871143,
}
HYPERBOLIC_DELTA_4_M2 = 1.5444849524223015

# parabolic (n = 3): phi for c = -6 and rho for c = -3 on the graph branch
PARABOLIC_PHI_M6 = [(-0.5, -0.71921499225516375), (-2.0, -1.0139924447665131)]
PARABOLIC_RHO_M3 = [(-0.5, 0.78202626559100617), (-2.0, 0.7079826100183063)]
SLAB_AT_SPAN_10 = -1.0471973472617174

CYLINDER_H1_C4 = 0.54930614433405485
ANNULI_THRESHOLD_3_1_12 = 0.42053433528396513
