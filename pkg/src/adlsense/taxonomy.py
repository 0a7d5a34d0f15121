"""Label vocabularies for the three recognition stages.

Stage names double as label namespaces on windows and in manifest files.
"watching_tv" the standing activity and "watching_tv_room" the acoustic
environment are deliberately distinct labels in distinct namespaces.
"""

STAGE_ADL = "adl"
STAGE_ENV = "env"
STAGE_STANDING = "standing"
STAGES = (STAGE_ADL, STAGE_ENV, STAGE_STANDING)

ADL_LABELS = ("walking", "running", "standing", "going_upstairs", "going_downstairs")
ENV_LABELS = (
    "bar",
    "classroom",
    "gym",
    "kitchen",
    "library",
    "street",
    "hall",
    "watching_tv_room",
    "bedroom",
)
STANDING_LABELS = ("watching_tv", "sleeping", "driving")

LABELS_BY_STAGE = {
    STAGE_ADL: ADL_LABELS,
    STAGE_ENV: ENV_LABELS,
    STAGE_STANDING: STANDING_LABELS,
}


def label_index(stage, label):
    """Position of a label in its stage vocabulary."""
    try:
        return LABELS_BY_STAGE[stage].index(label)
    except ValueError:
        raise KeyError(f"unknown {stage} label {label!r}") from None
