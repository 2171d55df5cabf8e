//! Converter terminal equations for the coupling transformer between an AC
//! bus (V, θ) and the converter terminal (Vsh, θsh).

/// Series admittance `g + jb = 1 / (r + jx)` of a coupling transformer.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Coupling {
    pub r: f64,
    pub x: f64,
    pub g: f64,
    pub b: f64,
    /// |r + jx|
    pub z: f64,
}

impl Coupling {
    /// Returns `None` for zero impedance.
    pub fn new(r: f64, x: f64) -> Option<Self> {
        let z2 = r * r + x * x;
        (z2 > 0.0 && z2.is_finite()).then(|| Coupling {
            r,
            x,
            g: r / z2,
            b: -x / z2,
            z: z2.sqrt(),
        })
    }
}

/// Partials with respect to (θ, V, θsh, Vsh).
pub type Grad4 = [f64; 4];

/// Terminal quantities and their partials at one operating point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TerminalFlows {
    pub p_sh: f64,
    pub q_sh: f64,
    pub p_dc_prime: f64,
    pub i_sh: f64,
    pub d_p_sh: Grad4,
    pub d_q_sh: Grad4,
    pub d_p_dc_prime: Grad4,
    pub d_i_sh: Grad4,
}

impl TerminalFlows {
    pub fn eval(v: f64, theta: f64, vsh: f64, theta_sh: f64, c: &Coupling) -> Self {
        let (s, co) = (theta - theta_sh).sin_cos();
        let (g, b) = (c.g, c.b);
        let vv = v * vsh;

        let p_sh = g * v * v - g * vv * co - b * vv * s;
        let q_sh = -b * v * v - g * vv * s + b * vv * co;
        let p_dc_prime = g * vsh * vsh - g * vv * co + b * vv * s;

        let dp_dth = g * vv * s - b * vv * co;
        let d_p_sh = [
            dp_dth,
            2.0 * g * v - g * vsh * co - b * vsh * s,
            -dp_dth,
            -g * v * co - b * v * s,
        ];
        let dq_dth = -g * vv * co - b * vv * s;
        let d_q_sh = [
            dq_dth,
            -2.0 * b * v - g * vsh * s + b * vsh * co,
            -dq_dth,
            -g * v * s + b * v * co,
        ];
        let dd_dth = g * vv * s + b * vv * co;
        let d_p_dc_prime = [
            dd_dth,
            -g * vsh * co + b * vsh * s,
            -dd_dth,
            2.0 * g * vsh - g * v * co + b * v * s,
        ];

        let u = (v * v + vsh * vsh - 2.0 * vv * co).max(0.0);
        let root = u.sqrt();
        let i_sh = root / c.z;
        // The magnitude is not differentiable at zero current.
        let d_i_sh = if root > 1e-12 {
            let k = 1.0 / (2.0 * root * c.z);
            let du_dth = 2.0 * vv * s;
            [
                k * du_dth,
                k * (2.0 * v - 2.0 * vsh * co),
                -k * du_dth,
                k * (2.0 * vsh - 2.0 * v * co),
            ]
        } else {
            [0.0; 4]
        };

        TerminalFlows {
            p_sh,
            q_sh,
            p_dc_prime,
            i_sh,
            d_p_sh,
            d_q_sh,
            d_p_dc_prime,
            d_i_sh,
        }
    }
}

/// Active and reactive power drawn from the AC bus into the coupling
/// transformer. `None` for zero impedance.
pub fn shunt_power_flow(v_m: f64, theta_m: f64, v_sh: f64, theta_sh: f64, rsh: f64, xsh: f64) -> Option<(f64, f64)> {
    let c = Coupling::new(rsh, xsh)?;
    let t = TerminalFlows::eval(v_m, theta_m, v_sh, theta_sh, &c);
    Some((t.p_sh, t.q_sh))
}

/// Active power entering the transformer from the converter side.
pub fn converter_throughput(v_m: f64, theta_m: f64, v_sh: f64, theta_sh: f64, rsh: f64, xsh: f64) -> Option<f64> {
    let c = Coupling::new(rsh, xsh)?;
    Some(TerminalFlows::eval(v_m, theta_m, v_sh, theta_sh, &c).p_dc_prime)
}

/// Current magnitude through the coupling transformer.
pub fn ish_magnitude(v_m: f64, theta_m: f64, v_sh: f64, theta_sh: f64, rsh: f64, xsh: f64) -> Option<f64> {
    let c = Coupling::new(rsh, xsh)?;
    Some(TerminalFlows::eval(v_m, theta_m, v_sh, theta_sh, &c).i_sh)
}

/// Converter switching and conduction losses, quadratic in current.
pub fn converter_loss(a: f64, b: f64, c: f64, i_sh: f64) -> f64 {
    a + b * i_sh + c * i_sh * i_sh
}
