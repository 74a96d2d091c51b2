mod common;

use common::*;

#[test]
fn encoder_gradients_match_finite_differences() {
    for s in 0..20 {
        let n = 6 + (s as usize % 10);
        let inst = grad_instance(100 + s, n, 5, 4, 3);
        let err = encoder_gradient_error(&inst, 1e-5);
        println!("instance {s}: n={n} max rel err {err:.3e}");
        assert!(err < 1e-4, "instance {s}: {err}");
    }
}

#[test]
fn logistic_gradients_match_finite_differences() {
    for s in 0..5 {
        let err = logreg_gradient_error(7 + s);
        assert!(err < 1e-5, "instance {s}: {err}");
    }
}
