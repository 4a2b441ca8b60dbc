# Licensed under the MIT license

import logging
import sys

from .certificate import BoundChainTest, BoundsTest, CertificateTest, ThetaRootTest
from .cli import CliTest
from .degrees import DegreesTest
from .equilibria import EquilibriaTest
from .integrator import IntegratorTest
from .linalg import LinalgTest
from .perf import PerfTest
from .pool import PoolTest
from .stability import StabilityTest
from .system import SystemTest

logging.basicConfig(level=logging.INFO, stream=sys.stderr)
