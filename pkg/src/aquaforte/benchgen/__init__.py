"""Generators for the sum-of-squares and functional-constraint benchmark families."""

from .generators import (
    MFD_CATEGORIES,
    SOS_FUNCTIONS,
    ManifestEntry,
    MfdInstance,
    SosParams,
    gen_mfd_instance,
    gen_sos_instance,
    random_polynomial,
    sos_target,
    sos_witness_identity,
)
from .polynomial import Polynomial
from .suite import MANIFEST, BenchManifest, gen_mfd_suite, gen_sos_suite, gen_suite
