import logging
import uuid

from django.utils import timezone
from rest_framework import status
from rest_framework.response import Response
from rest_framework.views import APIView

from . import experiments
from .exceptions import MigrationLabError, NonCompetitivePolicyError
from .models import ExperimentReport
from .reports import build_report
from .serializers import (
    ExperimentReportSerializer,
    LowerBoundConfigSerializer,
    LpConfigSerializer,
    ReportListRequestSerializer,
    SimulateConfigSerializer,
)

logger = logging.getLogger(__name__)


def _meta():
    return {
        "timestamp": timezone.now().isoformat(),
        "request_id": str(uuid.uuid4())[:12]
    }


def _bad_request(serializer):
    return Response(
        {
            "status": "error",
            "code": 400,
            "message": "Bad request",
            "data": None,
            "errors": [
                {
                    "field": field,
                    "message": error[0] if isinstance(error, list) else str(error)
                }
                for field, error in serializer.errors.items()
            ],
            "meta": _meta()
        },
        status=status.HTTP_400_BAD_REQUEST
    )


def _domain_error(exc, data=None):
    logger.warning("request rejected: %s: %s", type(exc).__name__, exc)
    return Response(
        {
            "status": "error",
            "code": 422,
            "message": "Unprocessable experiment",
            "data": data,
            "errors": [
                {
                    "field": type(exc).__name__,
                    "message": str(exc)
                }
            ],
            "meta": _meta()
        },
        status=status.HTTP_422_UNPROCESSABLE_ENTITY
    )


def _outcome_response(outcome, message):
    saved = experiments.persist(outcome)
    data = outcome.report()
    data["report_id"] = saved.report_id
    data["exit_code"] = outcome.exit_code
    return Response(
        {
            "status": "success",
            "code": 200,
            "message": message,
            "data": data,
            "meta": _meta()
        },
        status=status.HTTP_200_OK
    )


class ConstantsAPIView(APIView):
    """API view returning the constants table"""

    def post(self, request):
        """Handle POST request for the constants"""
        return _outcome_response(experiments.constants_table(), "Constants computed")


class SimulateAPIView(APIView):
    """API view to run one policy against the offline optimum"""

    def post(self, request):
        """Handle POST request to simulate a policy"""
        serializer = SimulateConfigSerializer(data=request.data)

        if not serializer.is_valid():
            return _bad_request(serializer)

        try:
            outcome = experiments.simulate(serializer.validated_data, serializer.canonical(), workers=1)
        except MigrationLabError as exc:
            return _domain_error(exc)

        return _outcome_response(outcome, "Simulation finished")


class LpAPIView(APIView):
    """API view to build and solve a factor-revealing LP"""

    def post(self, request):
        """Handle POST request to solve an LP model"""
        serializer = LpConfigSerializer(data=request.data)

        if not serializer.is_valid():
            return _bad_request(serializer)

        try:
            outcome = experiments.solve_lp_config(
                serializer.validated_data, serializer.model_params(), serializer.canonical()
            )
        except MigrationLabError as exc:
            return _domain_error(exc)

        return _outcome_response(outcome, "LP solved" if outcome.passed else "LP did not solve")


class LowerBoundAPIView(APIView):
    """API view to run adversarial epochs against a fixed-phase policy"""

    def post(self, request):
        """Handle POST request to run the lower-bound game"""
        serializer = LowerBoundConfigSerializer(data=request.data)

        if not serializer.is_valid():
            return _bad_request(serializer)

        try:
            outcome = experiments.lowerbound(serializer.validated_data, serializer.canonical())
        except NonCompetitivePolicyError as exc:
            # the diagnostic still carries what the policy paid
            return _domain_error(exc, build_report(
                "lowerbound", serializer.canonical(), {"phases": exc.phases, "c_alg": exc.c_alg}
            ))
        except MigrationLabError as exc:
            return _domain_error(exc)

        return _outcome_response(outcome, "Epochs finished")


class ReportListAPIView(APIView):
    """API view to list persisted experiment reports"""

    def post(self, request):
        """Handle POST request to list reports, optionally filtered"""
        serializer = ReportListRequestSerializer(data=request.data)

        if not serializer.is_valid():
            return _bad_request(serializer)

        reports = ExperimentReport.objects.all()
        command = serializer.validated_data.get("command")
        if command:
            reports = reports.filter(command=command)
        passed = serializer.validated_data.get("passed")
        if passed is not None:
            reports = reports.filter(passed=passed)

        return Response(
            {
                "status": "success",
                "code": 200,
                "message": "Reports retrieved successfully",
                "data": {
                    "reports": ExperimentReportSerializer(reports, many=True).data,
                    "total_count": reports.count()
                },
                "meta": _meta()
            },
            status=status.HTTP_200_OK
        )
