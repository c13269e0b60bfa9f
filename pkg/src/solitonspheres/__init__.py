"""Soliton spheres: spectral data of 1-D Dirac operators and the surfaces they generate."""
from .errors import (ConvergenceError, IllPosedError, ParameterError, ResolutionError, SingularSynthesisError,
                     SolitonError, SpectralParseError, StructuralError, ValidationError)
from .spectral_data import (HalfIntegerLevel, ReflectionTable, SpectralData, ValidationReport, load,
                            mkdv_deform, save, validate)
from .scattering import (GridPotential, JostField, ScatteringReport, bound_state, default_k_grid,
                         discrete_spectrum, jost_solve, scattering_coefficients, transmission_a)
from .reflectionless import (dirac_potential, dirac_sphere_data, jost_from_data, kernel_matrix,
                             potential_from_data, synthesize)
from .marchenko import (GoursatPair, MarchenkoKernel, build_kernel, goursat_pair, goursat_residual,
                        recover_potential, solve_marchenko)
from .kruskal import KruskalReport, kruskal_integral, kruskal_report, trace_rhs
from .weierstrass import (ImmersedSurface, SpinorField, build_spinor, closure_check, detect_branch_points,
                          immerse, is_revolution, kernel_dimension, rotate_frame, rotation_matrix,
                          spinor_from_immersion, star_transform, to_plane, willmore)

__version__ = "0.1.0"
