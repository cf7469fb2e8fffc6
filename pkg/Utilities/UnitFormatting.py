# -*- coding: utf-8 -*-

prefixDict = {
    "P": 1e15,
    "T": 1e12,
    "G": 1e9,
    "M": 1e6,
    "k": 1e3,
    "":  1,
    "m": 1e-3,
    "u": 1e-6,
    "n": 1e-9,
    "p": 1e-12,
    "f": 1e-15
}

def formatPrefix(n, unit, precision = -1):
    """
    Format a quantity with an engineering prefix, e.g. 1.0417e-6 s -> "1.0417 us".

    Parameters
    ----------
    n : float
        Value in base units.
    unit : str
        Unit symbol appended after the prefix.
    precision : int, optional
        Decimal digits kept after scaling, -1 rounds to an integer. The default is -1.

    Returns
    -------
    str

    """
    n = float(n)
    if n == 0:
        return f"0 {unit}"

    factor, prefixStr = getPrefix(n)
    scaled = n / factor

    if precision == -1:
        rounded = round(scaled)
    else:
        rounded = round(scaled, ndigits = precision)

    return f"{rounded:g} {prefixStr}{unit}"

def getPrefix(n):
    # Sign does not change the prefix; anything below femto stays in femto
    n = abs(n)
    for prefix in prefixDict:
        if n >= prefixDict[prefix]:
            return prefixDict[prefix], prefix
    return prefixDict["f"], "f"
