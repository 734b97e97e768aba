"""
The frame server: the cloud side of split inference.

It accepts request frame bytes only and answers with response frame bytes,
so clean tokens, noise and denoiser state never reach it. Responses are a
pure function of the request bytes and the frozen encoder, which is shared
read-only between concurrent requests.
"""

import logging
from time import perf_counter

from ..exceptions import (
    FrameDimensionError,
    FrameError,
    FrameErrorCode,
    SequenceTooLongError,
    SplitDenoiseError,
    UnknownMessageError,
)
from ..model.encoder import EncoderWeights, encode_batch
from .frames import (
    Frame,
    MessageType,
    decode_frame,
    embed_response,
    encode_frame,
    error_frame,
    frame_for_error,
)

log = logging.getLogger(__name__)

MAX_SEQUENCE_LENGTH = 512


class FrameServer:
    """Answers EmbedRequest frames with the encoder's sentence embedding."""

    def __init__(
        self, encoder: EncoderWeights, max_sequence_length: int = MAX_SEQUENCE_LENGTH
    ) -> None:
        self.encoder = encoder
        self.max_sequence_length = min(max_sequence_length, encoder.config.max_len)

    @property
    def dim(self) -> int:
        return self.encoder.config.dim

    def handle(self, data: bytes) -> bytes:
        """
        Answer one request. Every failure becomes an Error frame; nothing
        raised while serving escapes to the caller.
        """

        start = perf_counter()
        try:
            response = encode_frame(self._answer(data))
            outcome = "ok"
        except FrameError as err:
            log.error("Rejected frame: %s", err)
            response = encode_frame(frame_for_error(err))
            outcome = err.code.name
        except SplitDenoiseError as err:
            log.error("Request failed: %s", err, exc_info=err)
            response = encode_frame(error_frame(FrameErrorCode.INTERNAL, str(err)))
            outcome = FrameErrorCode.INTERNAL.name
        log.debug(
            "Frame handled in %sms: %s bytes in, %s bytes out, %s",
            round((perf_counter() - start) * 1000, 3),
            len(data),
            len(response),
            outcome,
        )
        return response

    def _answer(self, data: bytes) -> Frame:
        frame = decode_frame(data)
        if frame.msg_type != MessageType.EMBED_REQUEST:
            raise UnknownMessageError(f"the server does not accept {frame.msg_type.name} frames")
        if frame.n > self.max_sequence_length:
            raise SequenceTooLongError(
                f"{frame.n} tokens exceeds the limit of {self.max_sequence_length}"
            )
        if frame.d != self.dim:
            raise FrameDimensionError(
                f"token width {frame.d} differs from the model width {self.dim}"
            )
        embedding = encode_batch(frame.rows()[None], self.encoder)[0]
        return embed_response(embedding)
