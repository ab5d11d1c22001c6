from rest_framework import serializers


class ActorBoxSerializer(serializers.Serializer):
    id = serializers.IntegerField(min_value=0)
    x1 = serializers.FloatField(min_value=0.0, max_value=1.0)
    y1 = serializers.FloatField(min_value=0.0, max_value=1.0)
    x2 = serializers.FloatField(min_value=0.0, max_value=1.0)
    y2 = serializers.FloatField(min_value=0.0, max_value=1.0)
    confidence = serializers.FloatField(
        min_value=0.0, max_value=1.0, default=1.0
    )
    labels = serializers.ListField(
        child=serializers.IntegerField(min_value=0), default=list
    )

    def validate(self, attrs):
        if attrs["x1"] >= attrs["x2"]:
            raise serializers.ValidationError({"x2": "x2 must exceed x1"})
        if attrs["y1"] >= attrs["y2"]:
            raise serializers.ValidationError({"y2": "y2 must exceed y1"})
        return attrs


class ClipSidecarSerializer(serializers.Serializer):
    video_id = serializers.CharField(max_length=200)
    clip_time_s = serializers.IntegerField(min_value=0)
    boxes = ActorBoxSerializer(many=True)
    layout = serializers.JSONField(required=False, default=dict)

    def validate_boxes(self, boxes):
        ids = [box["id"] for box in boxes]
        if len(ids) != len(set(ids)):
            raise serializers.ValidationError("box ids must be unique")
        return boxes
