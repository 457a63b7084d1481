"""Operator calculus on Dirac chains: exact chain algebra, form pairing,
B^r norm estimates, domain representatives and flows."""
from .multivec import (KVector, MassUndetermined, SymTensor, blade, inner, mass, massUpper, perpKV,
                       retractKV, scalar, symCompose, symNorm, unit, vector, wedge)
from .chain import (ChainElement, DiracChain, OpenRegion, ball_region, box_region, canonicalize,
                    differenceChain, restrict, slit_disk_region, support, translate)
from . import chainops, flow, form, norms, rep

__version__ = "0.1.0"
