"""Slow pure-Python ristretto255, written from the published encoding rules.

Independent of libsodium and of the package under test; used to derive the
golden vectors and to cross-check the group backend.
"""

P = 2**255 - 19
L = 2**252 + 27742317777372353535851937790883648493
D = (-121665 * pow(121666, -1, P)) % P
SQRT_M1 = pow(2, (P - 1) // 4, P)


def _neg(x):
    return x % P & 1 == 1


def _abs(x):
    return (-x) % P if _neg(x) else x % P


def sqrt_ratio_m1(u, v):
    u, v = u % P, v % P
    v3 = v * v % P * v % P
    v7 = v3 * v3 % P * v % P
    r = u * v3 % P * pow(u * v7 % P, (P - 5) // 8, P) % P
    check = v * r % P * r % P
    correct = check == u
    flipped = check == (-u) % P
    flipped_i = check == (-u) * SQRT_M1 % P
    if flipped or flipped_i:
        r = r * SQRT_M1 % P
    return correct or flipped, _abs(r)


INVSQRT_A_MINUS_D = sqrt_ratio_m1(1, (-1 - D) % P)[1]

IDENTITY = (0, 1, 1, 0)


def _base():
    y = 4 * pow(5, -1, P) % P
    ok, x = sqrt_ratio_m1(y * y - 1, D * y * y + 1)
    assert ok
    return (x, y, 1, x * y % P)


def add(p1, p2):
    X1, Y1, Z1, T1 = p1
    X2, Y2, Z2, T2 = p2
    a = (Y1 - X1) * (Y2 - X2) % P
    b = (Y1 + X1) * (Y2 + X2) % P
    c = T1 * 2 * D % P * T2 % P
    d = Z1 * 2 * Z2 % P
    e, f, g, h = b - a, d - c, d + c, b + a
    return (e * f % P, g * h % P, f * g % P, e * h % P)


def neg(p):
    X, Y, Z, T = p
    return ((-X) % P, Y, Z, (-T) % P)


def mul(k, p):
    k %= L
    acc = IDENTITY
    while k:
        if k & 1:
            acc = add(acc, p)
        p = add(p, p)
        k >>= 1
    return acc


B = _base()


def encode(p):
    X0, Y0, Z0, T0 = p
    u1 = (Z0 + Y0) * (Z0 - Y0) % P
    u2 = X0 * Y0 % P
    _, invsqrt = sqrt_ratio_m1(1, u1 * u2 % P * u2 % P)
    den1 = invsqrt * u1 % P
    den2 = invsqrt * u2 % P
    z_inv = den1 * den2 % P * T0 % P
    if _neg(T0 * z_inv):
        X, Y, den_inv = Y0 * SQRT_M1 % P, X0 * SQRT_M1 % P, den1 * INVSQRT_A_MINUS_D % P
    else:
        X, Y, den_inv = X0, Y0, den2
    if _neg(X * z_inv):
        Y = (-Y) % P
    s = _abs(den_inv * (Z0 - Y))
    return s.to_bytes(32, "little")


def decode(data):
    """The point for a canonical encoding, or None."""
    s = int.from_bytes(data, "little")
    if len(data) != 32 or s >= P or _neg(s):
        return None
    ss = s * s % P
    u1 = (1 - ss) % P
    u2 = (1 + ss) % P
    u2_sqr = u2 * u2 % P
    v = (-(D * u1 % P * u1) - u2_sqr) % P
    was_square, invsqrt = sqrt_ratio_m1(1, v * u2_sqr)
    den_x = invsqrt * u2 % P
    den_y = invsqrt * den_x % P * v % P
    x = _abs(2 * s * den_x)
    y = u1 * den_y % P
    t = x * y % P
    if not was_square or _neg(t) or y == 0:
        return None
    return (x, y, 1, t)


def base_exp(k):
    return encode(mul(k, B))


def exp(point_bytes, k):
    return encode(mul(k, decode(point_bytes)))


def combine(a_bytes, b_bytes):
    return encode(add(decode(a_bytes), decode(b_bytes)))
