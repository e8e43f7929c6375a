from src.cq_model import CIBlock, StateFamilySpec, StructuredCIState, gaussian_density, realize

CONSTANT = StateFamilySpec("constant", {"dim": 1})
QUBIT = StateFamilySpec("qubit_bloch", {"alpha": 1.0, "beta": 1.0, "mu": 0.2})


def gaussian_pair(grid, var_x=1.0, var_y=1.0, family_x=CONSTANT, family_y=CONSTANT):
    """CCQ state of independent centred Gaussians with a product state map."""
    block = CIBlock(1.0, gaussian_density(0.0, var_x, grid), gaussian_density(0.0, var_y, grid), family_x, family_y)
    return realize(StructuredCIState([block]))


def small_scenario(checks=None, **overrides):
    """Scenario record with two standard Gaussians and trivial M on a coarse grid."""
    record = {
        "schema_version": 1,
        "name": "small",
        "description": "unit-test scenario",
        "seed": None,
        "grid": {
            "x": {"lo": -8.0, "hi": 8.0, "points": 129},
            "y": {"lo": -8.0, "hi": 8.0, "points": 129},
        },
        "blocks": [{
            "weight": 1.0,
            "density_x": {"kind": "gaussian", "mean": 0.0, "variance": 1.0},
            "density_y": {"kind": "gaussian", "mean": 0.0, "variance": 1.0},
            "family_x": {"name": "constant", "params": {"dim": 1}},
            "family_y": {"name": "constant", "params": {"dim": 1}},
        }],
        "suite": None,
        "checks": checks or [{"name": "epi", "params": {}}],
        "tolerances": {},
    }
    record.update(overrides)
    return record
