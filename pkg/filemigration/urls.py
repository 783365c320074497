from django.urls import path
from .views import (
    ConstantsAPIView,
    SimulateAPIView,
    LpAPIView,
    LowerBoundAPIView,
    ReportListAPIView
)

urlpatterns = [
    path('api/constants/', ConstantsAPIView.as_view(), name='constants'),
    path('api/simulate/', SimulateAPIView.as_view(), name='simulate'),
    path('api/lp/', LpAPIView.as_view(), name='lp'),
    path('api/lowerbound/', LowerBoundAPIView.as_view(), name='lowerbound'),
    path('api/reports/', ReportListAPIView.as_view(), name='reports'),
]
