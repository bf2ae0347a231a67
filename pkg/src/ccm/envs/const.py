from ._enums import PatientGroup

SYNTHETIC_EPISODE_LEN = 100

GLUCOSE_EPISODE_LEN = 1440

TIR_LOW = 70.0

TIR_HIGH = 180.0

DIGESTS_FILE_NAME = "digests.json"

# log-uniform spread of each glucose parameter around the base individual
GROUP_SPREADS: dict[PatientGroup, float] = {
    PatientGroup.adult: 0.10,
    PatientGroup.adolescent: 0.25,
    PatientGroup.child: 0.45,
}

MAX_SPREAD = 0.5

COHORT_GROUP_ORDER: tuple[PatientGroup, ...] = (PatientGroup.adolescent, PatientGroup.adult, PatientGroup.child)

# bioavailability stays a fraction, so it is never perturbed
FIXED_PARAMS: tuple[str, ...] = ("f",)

PARAM_ERROR_MSG = "glucose parameters must be finite and positive"

FIXTURE_DIGEST_ERROR_MSG = "fixture does not match its recorded digest"
