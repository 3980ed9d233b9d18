//! Sphere test vs segment test vs full retraining, at two data scales.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use segbound_bench::make_case;
use segbound_core::regions::{
    half_space_closed_form, modification_gradients, segment_region, sphere_region,
};
use segbound_core::tasks::coefficient_sensitivity;
use segbound_core::trainer::{retrain_oracle, TrainConfig};
use segbound_core::Region;

fn bench_bounds(c: &mut Criterion) {
    let mut group = c.benchmark_group("coefficient-bounds");
    for (n, d) in [(2_000usize, 10usize), (20_000, 50)] {
        let case = make_case(n, d, 0.01);
        let g = modification_gradients(
            case.kind,
            case.c_reg,
            &case.w0.w,
            &case.base,
            &case.modification,
        )
        .unwrap();

        group.bench_with_input(BenchmarkId::new("sphere", n), &n, |b, _| {
            b.iter(|| {
                let sphere = sphere_region(&g, &case.w0.w).unwrap();
                coefficient_sensitivity(Region::Sphere(&sphere), case.base.dim).unwrap()
            })
        });
        group.bench_with_input(BenchmarkId::new("segment", n), &n, |b, _| {
            b.iter(|| {
                let sphere = sphere_region(&g, &case.w0.w).unwrap();
                let plane = half_space_closed_form(&g, &case.w0.w).unwrap();
                let seg = segment_region(&sphere, &plane).unwrap();
                coefficient_sensitivity(Region::Segment(&seg), case.base.dim).unwrap()
            })
        });
        group.sample_size(10);
        group.bench_with_input(BenchmarkId::new("retrain", n), &n, |b, _| {
            b.iter(|| {
                retrain_oracle(
                    case.kind,
                    &case.base,
                    &case.modification,
                    &TrainConfig::new(case.c_reg),
                )
                .unwrap()
            })
        });
    }
    group.finish();
}

criterion_group!(benches, bench_bounds);
criterion_main!(benches);
