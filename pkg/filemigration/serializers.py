import json
import math
from pathlib import Path

from rest_framework import serializers

from .algorithms import POLICIES
from .constants import migration_constants
from .exceptions import InstanceError, MigrationLabError
from .factor_lp import DLM_BETA, DLM_BETA_PRIME, DLM_DELTA, DLM_PHI
from .instances import Instance, checked, round_half_up
from .metric import MetricSpace
from .models import ExperimentReport

GENERATOR_CHOICES = ['linear', 'bipartite', 'random', 'all-at-start']
LP_MODEL_CHOICES = ['mtlm', 'dlm', 'dlm-no-short']
LOWERBOUND_POLICY_CHOICES = ['mtlm', 'mtm', 'stay', 'random']
SOLVER_CHOICES = ['simplex', 'highs']


class RatioField(serializers.Field):
    """Float that renders infinity as the string 'inf'"""

    def to_representation(self, value):
        if value is None:
            return None
        if math.isinf(value):
            return 'inf'
        return float(value)


class InstanceSerializer(serializers.Serializer):
    """Serializer for the JSON instance format"""

    D = serializers.IntegerField(min_value=1)
    points = serializers.ListField(child=serializers.CharField(), required=False)
    dist = serializers.ListField(child=serializers.ListField(child=serializers.FloatField()))
    start = serializers.IntegerField(min_value=0)
    requests = serializers.ListField(child=serializers.IntegerField(min_value=0), allow_empty=True)

    def validate(self, data):
        """Build the metric and check every point id against it"""
        dist = data['dist']
        n = len(dist)
        if n == 0 or any(len(row) != n for row in dist):
            raise serializers.ValidationError({'dist': 'dist must be a nonempty square matrix'})
        points = data.get('points') or [f"p{i}" for i in range(n)]
        if len(points) != n:
            raise serializers.ValidationError({'points': f'{len(points)} labels for {n} points'})
        if data['start'] >= n:
            raise serializers.ValidationError({'start': f'start {data["start"]} outside 0..{n - 1}'})
        bad = [r for r in data['requests'] if r >= n]
        if bad:
            raise serializers.ValidationError({'requests': f'request ids outside 0..{n - 1}: {bad[:5]}'})
        try:
            data['instance'] = checked(
                Instance(MetricSpace(dist, data['D'], names=points), data['start'], tuple(data['requests']))
            )
        except MigrationLabError as exc:
            raise serializers.ValidationError({'dist': str(exc)})
        return data

    def to_representation(self, instance):
        """Render an Instance in the file format"""
        return instance.to_dict()


def load_instance(path) -> Instance:
    try:
        payload = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise InstanceError(f"cannot read instance file {path}: {exc}") from exc
    serializer = InstanceSerializer(data=payload)
    if not serializer.is_valid():
        raise InstanceError(f"invalid instance file {path}: {dict(serializer.errors)}")
    instance = serializer.validated_data['instance']
    return Instance(instance.space, instance.start, instance.requests, {'generator': 'file', 'path': str(path)})


def dump_instance(instance: Instance, path):
    path = Path(path)
    path.write_text(json.dumps(InstanceSerializer(instance).data, sort_keys=True) + '\n')
    return path


class SimulateConfigSerializer(serializers.Serializer):
    """Serializer for a simulate run: one policy on a generated or inline instance"""

    alg = serializers.ChoiceField(choices=sorted(POLICIES))
    gen = serializers.ChoiceField(choices=GENERATOR_CHOICES, required=False)
    params = serializers.DictField(required=False, default=dict)
    instance = InstanceSerializer(required=False)
    seed = serializers.IntegerField(required=False)
    runs = serializers.IntegerField(min_value=1, default=1)
    free_start = serializers.BooleanField(default=False)
    tol = serializers.FloatField(min_value=0.0, required=False)

    def validate(self, data):
        """Exactly one instance source; repeated runs need a seeded generator"""
        if ('gen' in data) == ('instance' in data):
            raise serializers.ValidationError("give either a generator (gen) or an inline instance")
        if data['runs'] > 1 and data.get('gen') not in ('random', 'all-at-start'):
            raise serializers.ValidationError({'runs': 'repeated runs need the random or all-at-start generator'})
        return data

    def canonical(self):
        """Config echo embedded in reports"""
        data = dict(self.validated_data)
        if 'instance' in data:
            data['instance'] = data['instance']['instance'].to_dict()
        return data


class LpConfigSerializer(serializers.Serializer):
    """Serializer for building and solving one factor-revealing LP"""

    model = serializers.ChoiceField(choices=LP_MODEL_CHOICES)
    delta = serializers.ListField(child=serializers.FloatField(), required=False)
    beta = serializers.ListField(child=serializers.FloatField(), required=False)
    beta_prime = serializers.ListField(child=serializers.FloatField(), required=False)
    phi = serializers.FloatField(required=False)
    beta2 = serializers.FloatField(required=False)
    multiset_pairs = serializers.BooleanField(default=True)
    opt_move_delta = serializers.FloatField(required=False)
    solver = serializers.ChoiceField(choices=SOLVER_CHOICES, default='simplex')
    tol = serializers.FloatField(min_value=0.0, required=False)

    def validate(self, data):
        """Check vector lengths against the chosen model"""
        if data['model'] == 'mtlm':
            for name in ('delta', 'beta'):
                if name in data and len(data[name]) != 1:
                    raise serializers.ValidationError({name: 'the mtlm model takes a single value'})
            extra = [name for name in ('beta_prime', 'beta2', 'opt_move_delta') if name in data]
            if extra:
                raise serializers.ValidationError({extra[0]: 'not a parameter of the mtlm model'})
            return data
        for name, size in (('delta', 3), ('beta', 3), ('beta_prime', 2)):
            if name in data and len(data[name]) != size:
                raise serializers.ValidationError({name: f'the dlm models take {size} values'})
        return data

    def model_params(self):
        """Keyword arguments for build_model"""
        data = self.validated_data
        if data['model'] == 'mtlm':
            c0 = migration_constants().c0
            return {
                'delta': data['delta'][0] if 'delta' in data else c0,
                'beta': data['beta'][0] if 'beta' in data else 1 + c0,
                'phi': data.get('phi', 1 + c0),
            }
        beta = list(data.get('beta', DLM_BETA))
        if 'beta2' in data:
            beta[1] = data['beta2']
        return {
            'delta': tuple(data.get('delta', DLM_DELTA)),
            'beta': tuple(beta),
            'beta_prime': tuple(data.get('beta_prime', DLM_BETA_PRIME)),
            'phi': data.get('phi', DLM_PHI),
            'include_multiset_pairs': data['multiset_pairs'],
            'opt_move_delta': data.get('opt_move_delta'),
        }

    def canonical(self):
        return dict(self.validated_data, params=self.model_params())


class LowerBoundConfigSerializer(serializers.Serializer):
    """Serializer for the adversarial epochs against a fixed-phase policy"""

    policy = serializers.ChoiceField(choices=LOWERBOUND_POLICY_CHOICES, default='mtlm')
    L = serializers.IntegerField(min_value=1, default=12)
    k = serializers.IntegerField(min_value=3, default=200)
    D = serializers.IntegerField(min_value=1, default=400)
    c = serializers.FloatField(required=False)
    epochs = serializers.IntegerField(min_value=1, default=20)
    seed = serializers.IntegerField(default=0)
    max_loops = serializers.IntegerField(min_value=1, default=5)
    max_phases = serializers.IntegerField(min_value=1, default=100)
    verify_state_graph = serializers.BooleanField(default=False)
    tol = serializers.FloatField(min_value=0.0, required=False)

    def validate(self, data):
        """Phase length defaults to c0; it must reach c_T and cover all k nodes"""
        constants = migration_constants()
        c = data.setdefault('c', constants.c0)
        if c < constants.cT:
            raise serializers.ValidationError({'c': f'c must be at least c_T = {constants.cT:.6f}'})
        if round_half_up(c * data["D"]) < data["k"]:
            raise serializers.ValidationError({'D': 'c*D requests cannot cover all k nodes of S'})
        return data

    def canonical(self):
        return dict(self.validated_data)


class RunSummarySerializer(serializers.Serializer):
    """One simulated run against its offline optimum"""

    policy = serializers.CharField()
    steps = serializers.IntegerField()
    complete_phases = serializers.SerializerMethodField()
    total_serve = serializers.FloatField()
    total_move = serializers.FloatField()
    total_cost = serializers.FloatField()
    tail_cost = serializers.FloatField()
    final_position = serializers.SerializerMethodField()

    def get_complete_phases(self, obj):
        return len(obj.phase_boundaries)

    def get_final_position(self, obj):
        return obj.positions[-1]


class CompetitiveReportSerializer(serializers.Serializer):
    """Aggregate costs, ratio and per-phase slacks"""

    total_alg = serializers.FloatField()
    total_opt = serializers.FloatField()
    ratio = RatioField()
    additive_offset = serializers.FloatField()
    min_slack = serializers.FloatField(allow_null=True)
    phase_count = serializers.SerializerMethodField()
    negative_phases = serializers.ListField(child=serializers.ListField(child=serializers.IntegerField()))
    tail_cost = serializers.FloatField()
    passed = serializers.BooleanField()
    warnings = serializers.ListField(child=serializers.CharField())

    def get_phase_count(self, obj):
        return len(obj.phase_slacks)


class LpSolutionSerializer(serializers.Serializer):
    status = serializers.CharField()
    objective_value = serializers.FloatField(allow_null=True)
    iterations = serializers.IntegerField()
    max_violation = serializers.FloatField()
    message = serializers.CharField(allow_blank=True)


class WitnessSerializer(serializers.Serializer):
    """Tight instance read off an optimal LP solution"""

    model = serializers.CharField()
    objective = serializers.FloatField()
    elements = serializers.ListField(child=serializers.CharField())
    table = serializers.SerializerMethodField()
    costs = serializers.DictField(child=serializers.FloatField())
    tight = serializers.ListField(child=serializers.CharField())
    triangle_violation = serializers.FloatField()

    def get_table(self, obj):
        return obj.table()


class PlayOutcomeSerializer(serializers.Serializer):
    kind = serializers.CharField()
    state_in = serializers.CharField()
    next = serializers.CharField()
    case = serializers.CharField(allow_blank=True)
    c_alg = serializers.FloatField()
    c_opt = serializers.FloatField()
    gain = serializers.FloatField()
    bound = serializers.FloatField()
    phases_used = serializers.IntegerField()
    flags = serializers.ListField(child=serializers.CharField())


class EpochSummarySerializer(serializers.Serializer):
    index = serializers.IntegerField()
    plays = serializers.IntegerField()
    c_alg = serializers.FloatField()
    c_opt = serializers.FloatField()
    gain = serializers.FloatField()
    closed_early = serializers.BooleanField()
    transition_cost = serializers.FloatField()


class StateGraphSerializer(serializers.Serializer):
    """Closed-form gains of the closed paths of the state graph"""

    L = serializers.IntegerField()
    c = serializers.FloatField()
    eps = serializers.FloatField()
    ladder_gain = serializers.FloatField()
    detour_gains = serializers.ListField(child=serializers.FloatField())
    min_gain = serializers.FloatField()
    closed_form = serializers.FloatField()


class ConstantsRowSerializer(serializers.Serializer):
    name = serializers.CharField()
    value = serializers.FloatField()
    residual = serializers.FloatField(allow_null=True)


class ExperimentReportSerializer(serializers.ModelSerializer):
    """Serializer for persisted experiment reports"""

    class Meta:
        model = ExperimentReport
        fields = [
            'report_id',
            'command',
            'config',
            'summary',
            'passed',
            'exit_code',
            'created_at',
        ]
        read_only_fields = ['report_id', 'created_at']


class ReportListRequestSerializer(serializers.Serializer):
    """Serializer for the report listing filter"""

    command = serializers.ChoiceField(choices=['simulate', 'lp', 'lowerbound', 'constants'], required=False)
    passed = serializers.BooleanField(required=False, allow_null=True)
