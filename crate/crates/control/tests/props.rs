use imbench_control::*;
use imbench_machine::{MachineParams, V2};
use proptest::prelude::*;

proptest! {
    #[test]
    fn command_never_exceeds_voltage_limit(
        ud in -1e4f64..1e4, uq in -1e4f64..1e4, udc in 1.0f64..1000.0,
    ) {
        let (u, gate) = saturate_voltage(V2::new(ud, uq), udc);
        prop_assert!(u.norm() <= udc / 3f64.sqrt() * (1.0 + 1e-12));
        prop_assert_eq!(gate, V2::new(ud, uq).norm() <= udc / 3f64.sqrt());
    }

    #[test]
    fn control_step_output_is_limited(
        id in -20.0f64..20.0, iq in -20.0f64..20.0,
        rd in -20.0f64..20.0, rq in -20.0f64..20.0,
        wm in -400.0f64..400.0, psi in 0.0f64..2.0,
    ) {
        let p = MachineParams::default();
        let cfg = ControllerConfig::for_machine(&p);
        let mut st = CtrlState { psi_r_hat: psi, ..CtrlState::default() };
        for _ in 0..3 {
            let meas = Measurement { i_s_ab: V2::new(id, iq), omega_m: wm };
            let (u, out, next) = control_step(meas, V2::new(rd, rq), &st, &cfg);
            prop_assert!(u.norm() <= cfg.u_max() * (1.0 + 1e-12));
            prop_assert!(out.u_ref_dq_sat.norm() <= cfg.u_max() * (1.0 + 1e-12));
            st = next;
        }
    }
}
