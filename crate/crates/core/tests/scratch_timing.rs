use std::time::Instant;

use spinflow_core::clifford::CliffordRep;
use spinflow_core::field::Pair;
use spinflow_core::functional::energy;
use spinflow_core::geometry::frame_data;
use spinflow_core::jet::{FourierMetric, MetricFamily, UnitSpinorField};
use spinflow_core::lattice::{FdOrder, TorusLattice};
use spinflow_core::rng::CounterRng;

#[test]
fn phase_timings_n7() {
    let rep = CliffordRep::<f64>::real_seven();
    let lat = TorusLattice::new(7, 8, 1.0, FdOrder::Two).unwrap();
    let mut rng = CounterRng::new(20 + 7);

    let t = Instant::now();
    let fm = FourierMetric::random_near_flat(7, 1.0, &mut rng, 2, 1, 0.05);
    let g = fm.sample(&lat);
    println!("metric sample: {:.2}s", t.elapsed().as_secs_f64());

    let t = Instant::now();
    let min = spinflow_core::gradient::ensure_spd(&lat, &g).unwrap();
    println!("ensure_spd: {:.2}s (min eig {min:.3})", t.elapsed().as_secs_f64());

    let t = Instant::now();
    let sf = UnitSpinorField::random(&rep, 1.0, &mut rng, 2, 2, 1, 0.05);
    let phi = sf.sample(&lat);
    println!("spinor sample: {:.2}s", t.elapsed().as_secs_f64());

    let t = Instant::now();
    let fd = frame_data(&lat, &g).unwrap();
    println!("frame_data: {:.2}s", t.elapsed().as_secs_f64());
    drop(fd);

    let t = Instant::now();
    let e = energy(&lat, &rep, &g, &phi).unwrap();
    println!("energy (incl. frame): {:.2}s (E={e:.6})", t.elapsed().as_secs_f64());

    let pair = Pair { g, phi };
    let t = Instant::now();
    let e2 = energy(&lat, &rep, &pair.g, &pair.phi).unwrap();
    println!("energy again: {:.2}s (E={e2:.6})", t.elapsed().as_secs_f64());
}
