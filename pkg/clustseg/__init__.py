"""ClustSeg - clustering-as-attention toolkit"""

from clustseg.config import VERSION

__version__ = VERSION
