class Potential:

    SVF = "svf"
    NORM = "norm"

    ALL = (SVF, NORM)


class Quantity:

    SVF_PRESSURE = "P"
    MATRIX_PRESSURE = "M"


class Method:

    SUBADDITIVE_INF = "subadditive-inf"
    CONE_CERTIFIED = "cone-certified"
    VARIATIONAL_MC = "variational-MC"
    EXACT_CONFORMAL = "exact-conformal"
    SLOPE_BRACKET = "slope-bracket"


class Splitting:

    EQUAL = "Equal"
    DISTINCT = "Distinct"
    UNDETERMINED = "Undetermined"


def quantity_of(potential: str) -> str:
    if potential == Potential.SVF:
        return Quantity.SVF_PRESSURE
    if potential == Potential.NORM:
        return Quantity.MATRIX_PRESSURE
    raise ValueError(f"unknown potential '{potential}'")
