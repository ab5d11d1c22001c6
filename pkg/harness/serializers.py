from django.conf import settings
from rest_framework import serializers

from cycleacr.structures import MODES
from harness.config import (
    CycleSettings,
    HeadSettings,
    ModelSettings,
    OptimizerConfig,
    RunConfig
)
from harness.models import EvaluationReport, ExperimentRun


def head_default(key):
    def default():
        return settings.ACTION_HEAD[key]

    return default


class ModelSettingsSerializer(serializers.Serializer):
    reduced_dim = serializers.IntegerField(
        min_value=1, default=head_default("REDUCED_DIM")
    )
    attention_dim = serializers.IntegerField(
        min_value=2, default=head_default("ATTENTION_DIM")
    )
    roi_size = serializers.ListField(
        child=serializers.IntegerField(min_value=1),
        min_length=2,
        max_length=2,
        default=head_default("ROI_OUTPUT_SIZE"),
    )
    sampling_ratio = serializers.IntegerField(
        min_value=0, default=head_default("ROI_SAMPLING_RATIO")
    )
    layer_norm_eps = serializers.FloatField(
        min_value=0.0, default=head_default("LAYER_NORM_EPS")
    )
    p_drop = serializers.FloatField(
        min_value=0.0, max_value=0.99, default=head_default("DROPOUT_RATE")
    )


class CycleSettingsSerializer(serializers.Serializer):
    depth = serializers.IntegerField(min_value=1, default=2)
    mode = serializers.CharField(default="cycle")
    use_local = serializers.BooleanField(default=True)
    use_global = serializers.BooleanField(default=True)

    def validate_mode(self, value):
        value = value.lower()
        if value not in MODES:
            raise serializers.ValidationError(f"mode must be one of {MODES}")
        return value

    def validate(self, attrs):
        if not (attrs["use_local"] or attrs["use_global"]):
            raise serializers.ValidationError(
                "at least one of use_local/use_global is required"
            )
        return attrs


class HeadSettingsSerializer(serializers.Serializer):
    depth = serializers.IntegerField(
        min_value=1, default=head_default("INTERACTION_DEPTH")
    )
    use_bank = serializers.BooleanField(default=True)
    window_s = serializers.IntegerField(
        min_value=0, default=head_default("BANK_WINDOW_S")
    )


class OptimizerSerializer(serializers.Serializer):
    lr = serializers.FloatField(min_value=0.0, default=0.05)
    momentum = serializers.FloatField(min_value=0.0, max_value=0.999, default=0.9)
    nesterov = serializers.BooleanField(default=True)
    weight_decay = serializers.FloatField(min_value=0.0, default=1e-4)
    warmup_steps = serializers.IntegerField(min_value=0, default=200)
    milestones = serializers.ListField(
        child=serializers.IntegerField(min_value=1), default=[1800, 2400]
    )
    gamma = serializers.FloatField(min_value=0.0, default=0.1)
    lr_multipliers = serializers.DictField(
        child=serializers.FloatField(min_value=0.0), default=dict
    )

    def validate_milestones(self, value):
        if any(b <= a for a, b in zip(value, value[1:])):
            raise serializers.ValidationError(
                "milestones must be strictly increasing"
            )
        return value


class RunConfigSerializer(serializers.Serializer):
    name = serializers.CharField(max_length=100, default="run")
    seed = serializers.IntegerField(min_value=0, default=0)
    batch_size = serializers.IntegerField(min_value=1, default=4)
    max_steps = serializers.IntegerField(min_value=0, default=3000)
    eval_every = serializers.IntegerField(min_value=0, default=500)
    model = ModelSettingsSerializer(default=dict)
    cycle = CycleSettingsSerializer(default=dict)
    head = HeadSettingsSerializer(default=dict)
    optimizer = OptimizerSerializer(default=dict)

    def validate(self, attrs):
        for section in ("model", "cycle", "head", "optimizer"):
            if not attrs[section]:
                nested = self.fields[section].__class__(data={})
                nested.is_valid(raise_exception=True)
                attrs[section] = nested.validated_data
        milestones = attrs["optimizer"]["milestones"]
        if milestones and milestones[-1] >= attrs["max_steps"]:
            raise serializers.ValidationError(
                {"optimizer": "milestones must be smaller than max_steps"}
            )
        return attrs

    def create(self, validated_data):
        model = dict(validated_data["model"])
        model["roi_size"] = tuple(model["roi_size"])
        optimizer = dict(validated_data["optimizer"])
        optimizer["milestones"] = tuple(optimizer["milestones"])
        optimizer["lr_multipliers"] = dict(optimizer["lr_multipliers"])
        return RunConfig(
            name=validated_data["name"],
            seed=validated_data["seed"],
            batch_size=validated_data["batch_size"],
            max_steps=validated_data["max_steps"],
            eval_every=validated_data["eval_every"],
            model=ModelSettings(**model),
            cycle=CycleSettings(**validated_data["cycle"]),
            head=HeadSettings(**validated_data["head"]),
            optimizer=OptimizerConfig(**optimizer),
        )


def parse_run_config(data: dict) -> RunConfig:
    serializer = RunConfigSerializer(data=data)
    serializer.is_valid(raise_exception=True)
    return serializer.save()


class AblationGridSerializer(serializers.Serializer):
    base = RunConfigSerializer(default=dict)
    modes = serializers.ListField(
        child=serializers.ChoiceField(choices=MODES),
        min_length=1,
        default=list(MODES),
    )
    branches = serializers.ListField(
        child=serializers.ListField(
            child=serializers.BooleanField(), min_length=2, max_length=2
        ),
        min_length=1,
        default=[[True, False], [False, True], [True, True]],
    )
    banks = serializers.ListField(
        child=serializers.BooleanField(), min_length=1, default=[False, True]
    )
    depths = serializers.ListField(
        child=serializers.IntegerField(min_value=1),
        min_length=1,
        default=[1, 2, 3],
    )
    seeds = serializers.ListField(
        child=serializers.IntegerField(min_value=0),
        min_length=1,
        default=[0, 1, 2],
    )
    data = serializers.CharField(required=False)

    def validate_branches(self, value):
        if any(not (local or global_) for local, global_ in value):
            raise serializers.ValidationError(
                "every branch setting needs local or global enabled"
            )
        return value

    def validate(self, attrs):
        if not attrs["base"]:
            base = RunConfigSerializer(data={})
            base.is_valid(raise_exception=True)
            attrs["base"] = base.validated_data
        return attrs


class ExperimentRunSerializer(serializers.ModelSerializer):
    class Meta:
        model = ExperimentRun
        fields = (
            "id",
            "name",
            "seed",
            "status",
            "steps_completed",
            "final_loss",
            "checkpoint_dir",
            "config",
            "created_at",
            "finished_at",
        )


class ExperimentRunListSerializer(ExperimentRunSerializer):
    reports_count = serializers.IntegerField(read_only=True)

    class Meta:
        model = ExperimentRun
        fields = (
            "id",
            "name",
            "seed",
            "status",
            "steps_completed",
            "final_loss",
            "reports_count",
        )


class EvaluationReportSerializer(serializers.ModelSerializer):
    run_name = serializers.CharField(
        source="run.name", read_only=True, default=None
    )

    class Meta:
        model = EvaluationReport
        fields = (
            "id",
            "run",
            "run_name",
            "data_dir",
            "mean_ap",
            "per_class_ap",
            "excluded_classes",
            "category_ap",
            "created_at",
        )


class EvaluationReportListSerializer(EvaluationReportSerializer):
    class Meta:
        model = EvaluationReport
        fields = ("id", "run", "run_name", "mean_ap", "created_at")
