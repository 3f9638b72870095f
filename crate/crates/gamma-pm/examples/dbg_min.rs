fn main() {
    let phi = gamma_pm::GrowthFunction::perona_malik();
    let opts = gamma_pm::energy::MinimizeOptions::default();
    match gamma_pm::energy::minimize_fnu_1d(1.0, 1.0, 0.1, &phi, 384, &opts) {
        Ok(rep) => println!(
            "ok: E={} tv={} iters={} gnorm={}",
            rep.energy.total, rep.tv, rep.iterations, rep.grad_norm
        ),
        Err(e) => println!("err: {e}"),
    }
}
