"""
Main URL configuration for API v1.
"""
from django.urls import path, include
from rest_framework.decorators import api_view, permission_classes
from rest_framework.permissions import AllowAny

from apps.gridflow.network import CASE_NAMES
from apps.harness.config import BEST_LAMBDA, IMPEDANCE_FACTOR, MODES
from apps.shared.utils.custom_response import CustomResponse


@api_view(['GET'])
@permission_classes([AllowAny])
def catalog(request):
    """Networks and experiment classes the harness can run."""
    return CustomResponse.success(
        message_key="SUCCESS_MESSAGE",
        request=request,
        data={
            'networks': [
                {'name': name, 'best_lambda': BEST_LAMBDA[name], 'impedance_factor': IMPEDANCE_FACTOR[name]}
                for name in CASE_NAMES
            ],
            'modes': list(MODES),
        }
    )


urlpatterns = [
    path('catalog/', catalog, name='catalog'),
    path('experiments/', include('apps.harness.urls.v1')),
]
