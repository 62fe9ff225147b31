use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};

/// Two-component vector. Used for αβ quantities and, as [`DqVec`], for
/// quantities in a rotating frame (`x` = d, `y` = q).
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct V2 {
    pub x: f64,
    pub y: f64,
}

pub type DqVec = V2;

impl V2 {
    pub const ZERO: V2 = V2 { x: 0.0, y: 0.0 };

    pub const fn new(x: f64, y: f64) -> V2 {
        V2 { x, y }
    }
    pub fn d(self) -> f64 {
        self.x
    }
    pub fn q(self) -> f64 {
        self.y
    }
    pub fn dot(self, o: V2) -> f64 {
        self.x * o.x + self.y * o.y
    }
    pub fn norm_sq(self) -> f64 {
        self.dot(self)
    }
    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }
    /// `J·v`, a quarter turn counter-clockwise.
    pub fn j(self) -> V2 {
        V2::new(-self.y, self.x)
    }
    /// `aᵀ·J·b`.
    pub fn tjx(self, b: V2) -> f64 {
        self.dot(b.j())
    }
    pub fn rotate(self, theta: f64) -> V2 {
        let (s, c) = theta.sin_cos();
        V2::new(c * self.x - s * self.y, s * self.x + c * self.y)
    }
    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

impl Add for V2 {
    type Output = V2;
    fn add(self, o: V2) -> V2 {
        V2::new(self.x + o.x, self.y + o.y)
    }
}
impl Sub for V2 {
    type Output = V2;
    fn sub(self, o: V2) -> V2 {
        V2::new(self.x - o.x, self.y - o.y)
    }
}
impl Neg for V2 {
    type Output = V2;
    fn neg(self) -> V2 {
        V2::new(-self.x, -self.y)
    }
}
impl Mul<f64> for V2 {
    type Output = V2;
    fn mul(self, k: f64) -> V2 {
        V2::new(self.x * k, self.y * k)
    }
}
impl Mul<V2> for f64 {
    type Output = V2;
    fn mul(self, v: V2) -> V2 {
        v * self
    }
}
impl AddAssign for V2 {
    fn add_assign(&mut self, o: V2) {
        *self = *self + o;
    }
}
impl SubAssign for V2 {
    fn sub_assign(&mut self, o: V2) {
        *self = *self - o;
    }
}

/// Row-major 2×2 matrix `[[a, b], [c, d]]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct M2 {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

impl M2 {
    pub const I: M2 = M2 { a: 1.0, b: 0.0, c: 0.0, d: 1.0 };
    pub const J: M2 = M2 { a: 0.0, b: -1.0, c: 1.0, d: 0.0 };

    pub fn diag(k: f64) -> M2 {
        M2 { a: k, b: 0.0, c: 0.0, d: k }
    }
    pub fn outer(u: V2, v: V2) -> M2 {
        M2 { a: u.x * v.x, b: u.x * v.y, c: u.y * v.x, d: u.y * v.y }
    }
    pub fn mul_v(self, v: V2) -> V2 {
        V2::new(self.a * v.x + self.b * v.y, self.c * v.x + self.d * v.y)
    }
    pub fn mul_m(self, o: M2) -> M2 {
        M2 {
            a: self.a * o.a + self.b * o.c,
            b: self.a * o.b + self.b * o.d,
            c: self.c * o.a + self.d * o.c,
            d: self.c * o.b + self.d * o.d,
        }
    }
    pub fn scale(self, k: f64) -> M2 {
        M2 { a: self.a * k, b: self.b * k, c: self.c * k, d: self.d * k }
    }
    pub fn det(self) -> f64 {
        self.a * self.d - self.b * self.c
    }
    /// Solve `self·x = r`; `None` when singular.
    pub fn solve(self, r: V2) -> Option<V2> {
        let det = self.det();
        if det == 0.0 || !det.is_finite() {
            return None;
        }
        Some(V2::new((self.d * r.x - self.b * r.y) / det, (self.a * r.y - self.c * r.x) / det))
    }
}

impl Add for M2 {
    type Output = M2;
    fn add(self, o: M2) -> M2 {
        M2 { a: self.a + o.a, b: self.b + o.b, c: self.c + o.c, d: self.d + o.d }
    }
}
impl Sub for M2 {
    type Output = M2;
    fn sub(self, o: M2) -> M2 {
        M2 { a: self.a - o.a, b: self.b - o.b, c: self.c - o.c, d: self.d - o.d }
    }
}
