//! Nakagami-m reception probability against distance.

use aodv_tune::sim::{packet_airtime, reception_probability, ChannelSpec};

fn main() {
    let base = ChannelSpec::default();
    println!("nominal range {} m, path loss exponent {}", base.nominal_range, base.path_loss_exponent);
    println!("{:>8} {:>8} {:>8} {:>8} {:>8}", "d (m)", "m=1", "m=3", "m=5", "no fade");
    for step in 0..=15 {
        let d = base.nominal_range * step as f64 / 10.0;
        let p = |m: f64, fading: bool| {
            reception_probability(d, &ChannelSpec { nakagami_m: m, fading, ..base.clone() })
        };
        println!(
            "{d:>8.1} {:>8.4} {:>8.4} {:>8.4} {:>8.4}",
            p(1.0, true),
            p(3.0, true),
            p(5.0, true),
            p(3.0, false)
        );
    }
    for bytes in [48u32, 512, 1500] {
        let t = packet_airtime(bytes, base.bandwidth_bps).unwrap();
        println!("{bytes} bytes: {:.3} ms on air", t * 1e3);
    }
}
