from ..exceptions import DimensionError
from ..schemas.protocol import PayloadAccounting
from .frames import FLOAT_BYTES, FRAME_OVERHEAD


def payload_accounting(n: int, d: int) -> PayloadAccounting:
    """
    Exact traffic of one embedding round trip: the request carries n token
    rows, the response a single d-vector.
    """

    if n < 0 or d < 1:
        raise DimensionError(f"request shape must have n >= 0 and d >= 1, got ({n}, {d})")
    upload = FLOAT_BYTES * n * d
    download = FLOAT_BYTES * d
    return PayloadAccounting(
        n=n,
        d=d,
        upload_payload=upload,
        download_payload=download,
        upload_bytes=FRAME_OVERHEAD + upload,
        download_bytes=FRAME_OVERHEAD + download,
    )
