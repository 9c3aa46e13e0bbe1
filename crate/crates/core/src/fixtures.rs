//! Built-in scenes.

use crate::error::{Error, Result};
use crate::scene::Scene;

struct Fixture {
    name: &'static str,
    text: &'static str,
}

const SHIPPED: &[Fixture] = &[
    Fixture {
        name: "so3-plane",
        text: r#"# Linear Poisson structure on so(3)*: {x, y} = z, {y, z} = x, {z, x} = y.
# X is the plane z = 0. TX^perp = span(x dz - z dx, ...) has rank 1 away from
# the origin and rank 0 at the origin, so X is not regular.
name = "so3-plane"
seed = 0

[poisson]
dim = 3
entries = ["1 2 z", "2 3 x", "3 1 y"]

[submanifold]
params = ["u", "v"]
chart = ["u", "v", "0"]
lo = [-1.0, -1.0]
hi = [1.0, 1.0]
grid = [5, 5]
"#,
    },
    Fixture {
        name: "logsympl-axis",
        text: r#"# Log-symplectic plane, pi = x d/dx ^ d/dy, with X the x-axis.
# sharp(dy) = x d/dx vanishes at the origin, so X is not regular.
name = "logsympl-axis"
seed = 0

[poisson]
dim = 2
entries = ["1 2 x"]

[submanifold]
params = ["u"]
chart = ["u", "0"]
lo = [-1.0]
hi = [1.0]
grid = [5]
"#,
    },
    Fixture {
        name: "cubic-graph",
        text: r#"# pi = d/dx ^ d/dy on R^3 and X the graph z = x^3.
# The conormal dz - 3x^2 dx is sent to 3x^2 d/dy, which vanishes on the line
# (0, y, 0): X is not regular there.
name = "cubic-graph"
seed = 0

[poisson]
dim = 3
entries = ["1 2 1"]

[submanifold]
params = ["u", "v"]
chart = ["u", "v", "u^3"]
lo = [-1.0, -1.0]
hi = [1.0, 1.0]
grid = [5, 3]
"#,
    },
    Fixture {
        name: "figure-eight",
        text: r#"# pi = d/dz ^ d/dth on R^3 x S^1, with the angle th as a plain coordinate.
# X is the figure eight (sin 2t, sin t, t) times the circle.
# chart (sin(2*t), sin(t), t, th); TX^perp has rank 1 everywhere, so X is regular.
name = "figure-eight"
seed = 0

[poisson]
dim = 4
coords = ["x", "y", "z", "th"]
entries = ["3 4 1"]

[submanifold]
params = ["t", "th"]
chart = ["sin(2*t)", "sin(t)", "t", "th"]
lo = [-1.0, -1.0]
hi = [1.0, 1.0]
grid = [5, 3]

[flow]
xi_radius = 0.1
"#,
    },
    Fixture {
        name: "coiso-line",
        text: r#"# pi = d/dx ^ d/dy on R^3 and X the x-axis.
# TX^perp = span(d/dx) lies in TX, so X is coisotropic; its saturation is the
# plane z = 0.
name = "coiso-line"
seed = 0

[poisson]
dim = 3
entries = ["1 2 1"]

[submanifold]
params = ["u"]
chart = ["u", "0", "0"]
lo = [-1.0]
hi = [1.0]
grid = [9]

[complement]
mode = "coisotropic"
"#,
    },
    Fixture {
        name: "transversal-ray",
        text: r#"# so(3)* with X a piece of the z-axis away from the origin.
# TX^perp = span(d/dx, d/dy) there, and TX + TX^perp = TM: a Poisson transversal.
name = "transversal-ray"
seed = 0

[poisson]
dim = 3
entries = ["1 2 z", "2 3 x", "3 1 y"]

[submanifold]
params = ["t"]
chart = ["0", "0", "t"]
lo = [0.5]
hi = [1.5]
grid = [5]

[flow]
xi_radius = 0.05

[complement]
mode = "transversal"

[tolerances]
normal_form = 1e-4
"#,
    },
    Fixture {
        name: "sympl-plane",
        text: r#"# Standard symplectic R^4 with pairs (x1, x3), (x2, x4).
# X is the tilted plane (u, v, v/2, u/2). Every submanifold of a symplectic
# manifold is regular.
name = "sympl-plane"
seed = 0

[poisson]
dim = 4
entries = ["1 3 1", "2 4 1"]

[submanifold]
params = ["u", "v"]
chart = ["u", "v", "0.5*v", "0.5*u"]
lo = [-0.5, -0.5]
hi = [0.5, 0.5]
grid = [3, 3]
"#,
    },
    Fixture {
        name: "zero-structure",
        text: r#"# The zero Poisson structure on R^3: every point is a leaf, so P = X.
name = "zero-structure"
seed = 0

[poisson]
dim = 3
entries = []

[submanifold]
params = ["u"]
chart = ["u", "0", "0"]
lo = [-1.0]
hi = [1.0]
grid = [5]
"#,
    },
    Fixture {
        name: "gotay-presymplectic",
        text: r#"# The presymplectic form dx ^ dy on R^3, embedded coisotropically in R^4.
# The kernel line d/dz becomes a cotangent direction xi and the result is
# d/dx ^ d/dy + d/dz ^ d/dxi.
name = "gotay-presymplectic"
seed = 0

[embedding]
dim = 3
two_form = ["1 2 1"]
"#,
    },
];

const EXTRA: &[Fixture] = &[
    Fixture {
        name: "so3-sphere",
        text: r#"# so(3)* with X a patch of the unit sphere, itself a symplectic leaf.
# TX^perp = 0, so the fibers have rank 0 and P = X.
name = "so3-sphere"
seed = 0

[poisson]
dim = 3
entries = ["1 2 z", "2 3 x", "3 1 y"]

[submanifold]
params = ["a", "b"]
chart = ["sin(a)*cos(b)", "sin(a)*sin(b)", "cos(a)"]
lo = [0.8, -0.5]
hi = [1.2, 0.5]
grid = [3, 3]
"#,
    },
    Fixture {
        name: "sympl-line",
        text: r#"# Standard symplectic R^4 and the line (u, u/2, 0, 0).
# X is isotropic: TX^perp has rank 3 and meets TX in a line.
name = "sympl-line"
seed = 0

[poisson]
dim = 4
entries = ["1 3 1", "2 4 1"]

[submanifold]
params = ["u"]
chart = ["u", "0.5*u", "0", "0"]
lo = [-0.5]
hi = [0.5]
grid = [5]

[complement]
mode = "pre_poisson"
"#,
    },
    Fixture {
        name: "coiso-plane",
        text: r#"# pi = d/dx ^ d/dy on R^3 and X the plane y = 0.
# TX^perp = span(d/dx) lies in TX; G = span(d/dx + d/dz) complements it in TX.
name = "coiso-plane"
seed = 0

[poisson]
dim = 3
entries = ["1 2 1"]

[submanifold]
params = ["u", "v"]
chart = ["u", "0", "v"]
lo = [-0.5, -0.5]
hi = [0.5, 0.5]
grid = [3, 3]

[complement]
mode = "coisotropic"
g = [["1", "0", "1"]]
"#,
    },
];

/// Names of the shipped fixtures, in a fixed order.
pub fn list() -> Vec<&'static str> {
    SHIPPED.iter().map(|f| f.name).collect()
}

/// Additional scenes used by the tests; `emit` accepts these too.
pub fn extras() -> Vec<&'static str> {
    EXTRA.iter().map(|f| f.name).collect()
}

pub fn emit(name: &str) -> Result<&'static str> {
    SHIPPED
        .iter()
        .chain(EXTRA)
        .find(|f| f.name == name)
        .map(|f| f.text)
        .ok_or_else(|| Error::Scene(format!("unknown fixture `{name}`")))
}

pub fn scene(name: &str) -> Result<Scene> {
    Scene::parse(emit(name)?)
}
