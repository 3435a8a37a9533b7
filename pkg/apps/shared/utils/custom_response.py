"""
Response envelope shared by every lab endpoint: ``{id, message, data}`` on
success, ``{id, message, errors}`` on failure.
"""
import logging
import math
from dataclasses import dataclass
from typing import Any, Dict, Optional, Union

from rest_framework.request import Request
from rest_framework.response import Response

from apps.shared.exceptions.errors import VoltVarLabError

logger = logging.getLogger(__name__)

MESSAGES = {
    "SUCCESS_MESSAGE": ("SUCCESS", "Success", 200),
    "NOT_FOUND": ("NOT_FOUND", "Not found", 404),
    "VALIDATION_ERROR": ("VALIDATION_ERROR", "Validation error", 400),
    "POWER_FLOW_ERROR": ("POWER_FLOW_ERROR", "Power flow did not converge", 422),
    "NUMERICAL_ERROR": ("NUMERICAL_ERROR", "Numerical failure during learning", 500),
    "INTERNAL_SERVER_ERROR": ("INTERNAL_SERVER_ERROR", "Internal server error", 500),
}


def _jsonable(value: Any) -> Any:
    if isinstance(value, float):
        return value if math.isfinite(value) else None
    if isinstance(value, (str, int, bool)) or value is None:
        return value
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if hasattr(value, 'tolist'):
        return _jsonable(value.tolist())
    return str(value)


@dataclass(frozen=True)
class ResponseBody:
    message_key: str

    def __post_init__(self):
        if self.message_key not in MESSAGES:
            object.__setattr__(self, 'message_key', "INTERNAL_SERVER_ERROR")

    @property
    def status_code(self) -> int:
        return MESSAGES[self.message_key][2]

    def to_dict(self, **kwargs) -> Dict[str, Any]:
        ident, message, _ = MESSAGES[self.message_key]
        return {"id": ident, "message": message, **kwargs}


class CustomResponse:
    @staticmethod
    def success(message_key: str = "SUCCESS_MESSAGE", request: Request = None, data: Any = None,
                status_code: int = None) -> Response:
        body = ResponseBody(message_key)
        return Response(body.to_dict(data=data), status=status_code or body.status_code)

    @staticmethod
    def error(message_key: str, request: Request = None, errors: Union[Dict[str, Any], str, None] = None,
              status_code: int = None) -> Response:
        body = ResponseBody(message_key)
        final_status = status_code or body.status_code
        path = getattr(request, 'path', None)
        logger.warning(f"Error response {body.message_key} ({final_status}) for {path or 'internal call'}")
        return Response(body.to_dict(**({'errors': errors} if errors else {})), status=final_status)

    @staticmethod
    def lab_error(exc: VoltVarLabError, request: Request = None) -> Response:
        """Envelope for a lab exception; its context (iterations, mismatch, ...) goes under errors."""
        errors = {'detail': exc.message}
        if exc.context:
            errors['context'] = _jsonable(exc.context)
        return CustomResponse.error(exc.message_key, request, errors)

    @staticmethod
    def validation_error(errors: Dict[str, Any], request: Request = None) -> Response:
        return CustomResponse.error("VALIDATION_ERROR", request, errors, status_code=400)

    @staticmethod
    def not_found(request: Request = None, errors: Optional[Dict[str, Any]] = None) -> Response:
        return CustomResponse.error("NOT_FOUND", request, errors, status_code=404)

    @staticmethod
    def internal_error(request: Request = None) -> Response:
        return CustomResponse.error("INTERNAL_SERVER_ERROR", request, status_code=500)
