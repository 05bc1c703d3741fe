"""Reference optimized parameter sets used as regression benchmarks."""

from __future__ import annotations

import numpy as np

from .models.redfield import HeatModelParams
from .models.vsystem import VModelParams

__all__ = [
    "TABLE_I_COLUMNS",
    "TABLE_I",
    "TABLE_II_COLUMNS",
    "TABLE_II",
    "TABLE_III_COLUMNS",
    "TABLE_III",
    "HEAT_TEMPERATURES",
    "EFFICIENT_DEVICE",
    "INEFFICIENT_DEVICE",
    "SENSITIVITY_DEVICE",
    "SENSITIVITY_R_GRID",
    "table_i_params",
    "table_ii_params",
    "table_iii_params",
]

HEAT_TEMPERATURES = {"T_H": 0.15, "T_C": 0.1, "T_D": 0.12}

# J_H maximization: theta, J, gamma_H, gamma_C, gamma_D, a0, a1, b0, b1, J_H
TABLE_I_COLUMNS = ("theta", "J", "gamma_H", "gamma_C", "gamma_D", "a0", "a1", "b0", "b1", "J_H")
TABLE_I = np.array(
    [
    (0.3900, 0.0164, 0.0021, 0.0020, 0.0001, 0.9995, 0.0005, 0.0006, 0.9994, 1.598e-05),
    (0.3890, 0.0172, 0.0022, 0.0024, 0.0001, 0.0001, 0.9999, 0.9998, 0.0002, 1.789e-05),
    (0.3897, 0.0044, 0.0025, 0.0023, 0.0001, 0.0007, 0.9993, 0.0001, 0.9999, 1.867e-05),
    (0.4022, 0.0664, 0.0025, 0.0025, 0.0004, 0.9999, 0.0001, 0.9999, 0.0001, 1.831e-05),
    (0.3891, 0.0180, 0.0025, 0.0025, 0.0002, 0.0021, 0.9979, 0.9999, 0.0001, 1.920e-05),
    (0.3896, 0.0041, 0.0025, 0.0024, 0.0018, 0.0002, 0.9998, 0.0001, 0.9999, 1.882e-05),
    (0.3898, 0.0177, 0.0025, 0.0024, 0.0002, 0.9999, 0.0001, 0.0002, 0.9998, 1.869e-05),
    (0.3888, 0.0052, 0.0024, 0.0025, 0.0001, 0.9992, 0.0008, 0.9998, 0.0002, 1.908e-05),
    (0.3895, 0.0126, 0.0025, 0.0025, 0.0001, 0.9992, 0.0008, 0.9999, 0.0001, 1.934e-05),
    (0.3893, 0.0178, 0.0025, 0.0025, 0.0001, 0.0002, 0.9998, 0.9998, 0.0002, 1.927e-05),
    (0.3892, 0.0124, 0.0024, 0.0025, 0.0014, 0.9998, 0.0002, 0.9994, 0.0006, 1.910e-05),
    (0.3897, 0.0041, 0.0025, 0.0024, 0.0019, 0.9998, 0.0002, 0.9999, 0.0001, 1.888e-05),
    (0.3895, 0.0178, 0.0025, 0.0024, 0.0001, 0.9994, 0.0006, 0.0002, 0.9998, 1.904e-05),
    (0.3885, 0.0174, 0.0022, 0.0025, 0.0001, 0.0003, 0.9997, 0.9989, 0.0011, 1.807e-05),
    (0.3894, 0.0060, 0.0024, 0.0023, 0.0004, 0.9998, 0.0002, 0.9998, 0.0002, 1.821e-05),
    (0.3899, 0.0190, 0.0025, 0.0024, 0.0008, 0.9998, 0.0002, 0.0004, 0.9996, 1.884e-05),
    (0.3893, 0.0085, 0.0025, 0.0025, 0.0021, 0.9990, 0.0010, 0.9999, 0.0001, 1.938e-05),
    (0.3904, 0.0178, 0.0025, 0.0022, 0.0005, 0.9998, 0.0002, 0.0002, 0.9998, 1.816e-05),
    (0.4032, 0.0651, 0.0025, 0.0024, 0.0021, 0.0015, 0.9985, 0.9998, 0.0002, 1.811e-05),
    ]
)

# rectification maximization (hot bath on site 1, cold bath on site 2)
TABLE_II_COLUMNS = ("theta", "J", "gamma_H", "gamma_C", "gamma_D")
TABLE_II = np.array(
    [
    (0.190, 0.111, 0.0002, 0.0012, 0.0004),
    (0.313, 0.052, 0.0001, 0.0007, 0.0000),
    (0.502, 0.102, 0.0017, 0.0002, 0.0001),
    (0.875, 0.594, 0.0002, 0.0008, 0.0009),
    (0.127, 0.043, 0.0008, 0.0017, 0.0007),
    (0.001, 0.150, 0.0004, 0.0025, 0.0023),
    (0.516, 0.089, 0.0009, 0.0002, 0.0020),
    (0.146, 0.083, 0.0002, 0.0015, 0.0010),
    (0.265, 0.087, 0.0013, 0.0007, 0.0008),
    (0.233, 0.108, 0.0003, 0.0010, 0.0002),
    (0.685, 0.441, 0.0007, 0.0008, 0.0002),
    (0.281, 0.356, 0.0008, 0.0021, 0.0003),
    (0.993, 0.330, 0.0001, 0.0001, 0.0015),
    (0.997, 0.781, 0.0002, 0.0013, 0.0001),
    (0.880, 0.669, 0.0000, 0.0013, 0.0020),
    (0.359, 0.083, 0.0004, 0.0005, 0.0021),
    (0.128, 0.071, 0.0000, 0.0017, 0.0007),
    (0.506, 0.218, 0.0012, 0.0004, 0.0012),
    (0.382, 0.116, 0.0000, 0.0005, 0.0001),
    (0.635, 0.175, 0.0005, 0.0002, 0.0008),
    (0.656, 0.210, 0.0018, 0.0001, 0.0022),
    (0.082, 0.034, 0.0009, 0.0022, 0.0020),
    (0.797, 0.259, 0.0015, 0.0001, 0.0013),
    (0.902, 0.494, 0.0007, 0.0003, 0.0023),
    ]
)

# efficiency maximization; logs are natural logarithms, gamma_d in Hz, Gamma in 1/ps
TABLE_III_COLUMNS = ("J", "eps_gap", "ln_gamma_d", "ln_Gamma")
TABLE_III = np.array(
    [
    (2.690, 0.257, 26.353, -7.613),
    (2.399, 0.194, 25.021, -8.206),
    (2.652, 0.326, 25.593, -7.974),
    (2.659, 0.266, 25.682, -7.801),
    (3.184, 0.889, 27.915, -7.330),
    (2.642, 0.327, 26.054, -7.998),
    (2.317, 0.118, 20.826, -8.536),
    (2.658, 0.266, 25.606, -7.818),
    (2.373, 0.175, 24.383, -8.268),
    (2.649, 0.312, 25.176, -7.954),
    (2.645, 0.267, 25.134, -7.893),
    (2.825, 0.238, 27.129, -7.374),
    (2.340, 0.145, 22.894, -8.396),
    (4.100, 3.304, 29.026, -7.713),
    (4.511, 1.576, 29.752, -8.094),
    (3.245, 0.760, 27.998, -7.345),
    (2.463, 0.239, 26.003, -8.106),
    (2.406, 0.200, 25.192, -8.190),
    (2.682, 0.260, 26.234, -7.650),
    (2.655, 0.267, 25.494, -7.840),
    (2.698, 0.253, 26.430, -7.588),
    (2.713, 0.255, 26.567, -7.542),
    (2.451, 0.232, 25.886, -8.119),
    (2.828, 0.235, 27.139, -7.372),
    (3.217, 0.413, 27.955, -7.335),
    (2.582, 0.303, 26.451, -8.035),
    (2.460, 0.238, 25.983, -8.108),
    (3.246, 3.596, 29.266, -8.549),
    (2.554, 0.289, 26.449, -8.047),
    (2.631, 0.271, 24.032, -7.928),
    (2.785, 0.255, 26.979, -7.414),
    (2.653, 0.323, 25.470, -7.968),
    (4.203, 3.193, 29.265, -7.867),
    (2.541, 0.284, 26.433, -8.053),
    (2.471, 0.245, 26.084, -8.097),
    (3.295, 2.166, 28.055, -7.364),
    (2.645, 0.267, 25.150, -7.892),
    (2.328, 0.132, 22.032, -8.461),
    (2.315, 0.117, 20.767, -8.539),
    (2.923, 0.324, 27.427, -7.321),
    (2.572, 0.299, 26.459, -8.039),
    (2.564, 0.295, 26.457, -8.043),
    (3.441, 4.014, 29.169, -8.419),
    (2.996, 4.876, 29.022, -8.729),
    (4.039, 1.448, 28.974, -7.691),
    (2.335, 0.140, 22.619, -8.418),
    (2.608, 0.314, 26.371, -8.022),
    (2.397, 0.192, 24.946, -8.213),
    (2.348, 0.151, 23.250, -8.368),
    (2.430, 0.217, 25.610, -8.147),
    ]
)
TABLE_III_GAMMA_RC = 0.1

EFFICIENT_DEVICE = VModelParams(eps_gap=1.3, J=0.12, gamma_d=3.53e11, Gamma=7.2e-5, Gamma_RC=0.5, r=6.34e-10)
INEFFICIENT_DEVICE = VModelParams(eps_gap=1.3, J=0.12, gamma_d=2.88e12, Gamma=0.0194, Gamma_RC=0.5, r=6.34e-10)
SENSITIVITY_DEVICE = VModelParams(eps_gap=1.3, J=0.12, gamma_d=1.0, Gamma=7.2e-5, Gamma_RC=0.5, r=6.34e-10)
SENSITIVITY_R_GRID = np.linspace(1e-10, 2e-9, 20)


def table_i_params(row: int) -> HeatModelParams:
    th, J, gH, gC, gD, a0, a1, b0, b1, _ = TABLE_I[row]
    return HeatModelParams(
        theta1=th, theta2=th, J=J, gamma_H=gH, gamma_C=gC, gamma_D=gD, a0=a0, a1=a1, b0=b0, b1=b1
    )


def table_ii_params(row: int) -> HeatModelParams:
    th, J, gH, gC, gD = TABLE_II[row]
    return HeatModelParams(
        theta1=th, theta2=th, J=J, gamma_H=gH, gamma_C=gC, gamma_D=gD, a0=1.0, a1=0.0, b0=0.0, b1=1.0
    )


def table_iii_params(row: int, Gamma_RC: float = TABLE_III_GAMMA_RC) -> VModelParams:
    J, gap, ln_gd, ln_G = TABLE_III[row]
    return VModelParams(
        eps_gap=gap, J=J, gamma_d=float(np.exp(ln_gd)), Gamma=float(np.exp(ln_G)), Gamma_RC=Gamma_RC, r=6.34e-10
    )
