from rest_framework import serializers

from synth_data.structures import (
    CATEGORIES,
    FEATURE_SOURCES,
    Rule,
    SceneSpec,
    default_rules
)


class RuleSerializer(serializers.Serializer):
    label = serializers.IntegerField(min_value=0)
    category = serializers.ChoiceField(choices=CATEGORIES)
    actor_pattern = serializers.IntegerField(
        min_value=0, allow_null=True, default=None
    )
    context_token = serializers.IntegerField(
        min_value=0, allow_null=True, default=None
    )
    phase = serializers.IntegerField(min_value=0, allow_null=True, default=None)
    partner_pattern = serializers.IntegerField(
        min_value=0, allow_null=True, default=None
    )
    memory_token = serializers.IntegerField(
        min_value=0, allow_null=True, default=None
    )
    held_items = serializers.ListField(
        child=serializers.IntegerField(min_value=0),
        allow_null=True,
        allow_empty=False,
        default=None,
    )

    def validate(self, attrs):
        category = attrs["category"]
        required = {
            "pose": "actor_pattern",
            "object": "context_token",
            "carry": "held_items",
            "person": "partner_pattern",
            "memory": "memory_token",
        }[category]
        if attrs[required] is None:
            raise serializers.ValidationError(
                {required: f"{category} rules need {required}"}
            )
        if category == "person" and attrs["actor_pattern"] is None:
            raise serializers.ValidationError(
                {"actor_pattern": "person rules need actor_pattern"}
            )
        return attrs


class SceneSpecSerializer(serializers.Serializer):
    grid = serializers.ListField(
        child=serializers.IntegerField(min_value=1),
        min_length=3,
        max_length=3,
        default=[16, 16, 8],
    )
    n_actors = serializers.IntegerField(min_value=0, default=3)
    min_actors = serializers.IntegerField(min_value=0, required=False)
    n_patterns = serializers.IntegerField(min_value=1, default=3)
    n_context_tokens = serializers.IntegerField(min_value=0, default=4)
    n_phases = serializers.IntegerField(min_value=1, default=2)
    n_memory_tokens = serializers.IntegerField(min_value=0, default=0)
    n_items = serializers.IntegerField(min_value=0, default=4)
    num_classes = serializers.IntegerField(min_value=1, default=8)
    channels = serializers.IntegerField(min_value=1, default=16)
    rule_table = RuleSerializer(many=True, required=False)
    seed = serializers.IntegerField(min_value=0, default=0)
    noise_std = serializers.FloatField(min_value=0.0, default=0.05)
    detector_jitter = serializers.FloatField(
        min_value=0.0, max_value=0.5, default=0.0
    )
    clips_per_video = serializers.IntegerField(min_value=1, default=1)
    memory_probability = serializers.FloatField(
        min_value=0.0, max_value=1.0, default=0.5
    )
    feature_source = serializers.ChoiceField(
        choices=FEATURE_SOURCES, default="embedding"
    )

    def validate(self, attrs):
        height, width, frames = attrs["grid"]
        if height < 2 or width < 2:
            raise serializers.ValidationError(
                {"grid": "feature maps need H, W >= 2"}
            )
        if frames < attrs["n_phases"]:
            raise serializers.ValidationError(
                {"n_phases": "every temporal phase needs at least one frame"}
            )
        attrs.setdefault("min_actors", min(1, attrs["n_actors"]))
        if attrs["min_actors"] > attrs["n_actors"]:
            raise serializers.ValidationError(
                {"min_actors": "min_actors cannot exceed n_actors"}
            )
        symbols = (
            attrs["n_patterns"]
            + attrs["n_context_tokens"]
            + attrs["n_memory_tokens"]
            + attrs["n_items"]
        )
        if symbols > attrs["channels"]:
            raise serializers.ValidationError(
                {"channels": f"{symbols} symbols need at least {symbols} channels"}
            )
        if attrs.get("rule_table") is None:
            attrs["rule_table"] = [
                rule.to_dict() for rule in default_rules(
                    attrs["n_memory_tokens"], attrs["n_items"]
                )
            ]
        self._validate_rules(attrs, attrs["rule_table"])
        return attrs

    def create(self, validated_data):
        data = dict(validated_data)
        data["grid"] = tuple(data["grid"])
        data["rule_table"] = tuple(Rule(**rule) for rule in data["rule_table"])
        return SceneSpec(**data)

    @staticmethod
    def _validate_rules(attrs, rules):
        limits = {
            "label": attrs["num_classes"],
            "actor_pattern": attrs["n_patterns"],
            "partner_pattern": attrs["n_patterns"],
            "context_token": attrs["n_context_tokens"],
            "phase": attrs["n_phases"],
            "memory_token": attrs["n_memory_tokens"],
        }
        for index, rule in enumerate(rules):
            for key, limit in limits.items():
                if rule[key] is not None and rule[key] >= limit:
                    raise serializers.ValidationError(
                        {"rule_table": f"rule {index}: {key} must be < {limit}"}
                    )
            # item k is used against context token k
            item_limit = min(attrs["n_items"], attrs["n_context_tokens"])
            for item in rule.get("held_items") or ():
                if item >= item_limit:
                    raise serializers.ValidationError(
                        {
                            "rule_table": f"rule {index}: held item {item} needs "
                            f"both an item and a context token, limit {item_limit}"
                        }
                    )
        if not any(
            rule["context_token"] is not None
            or rule["memory_token"] is not None
            or rule.get("held_items")
            for rule in rules
        ):
            raise serializers.ValidationError(
                {
                    "rule_table": "at least one rule must depend on a token "
                    "outside the actor boxes"
                }
            )


def parse_scene_spec(data: dict) -> SceneSpec:
    serializer = SceneSpecSerializer(data=data)
    serializer.is_valid(raise_exception=True)
    return serializer.save()
