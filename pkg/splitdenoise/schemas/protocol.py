from typing import Dict

from pydantic import BaseModel, Field


class PayloadAccounting(BaseModel):
    """Bytes moved by one embedding request and its response."""

    n: int = Field(..., ge=0, description="Tokens in the request.")
    d: int = Field(..., gt=0, description="Token and sentence embedding width.")
    upload_payload: int = Field(..., ge=0, description="Float bytes in the request body.")
    download_payload: int = Field(..., ge=0, description="Float bytes in the response body.")
    upload_bytes: int = Field(..., ge=0, description="Whole request frame with header and CRC.")
    download_bytes: int = Field(..., ge=0, description="Whole response frame with header and CRC.")

    def as_metrics(self) -> Dict[str, float]:
        return {"bytes_up": float(self.upload_bytes), "bytes_down": float(self.download_bytes)}

    class Config:
        """Modifies pydantic behavior."""

        allow_mutation = False
