use criterion::{criterion_group, criterion_main, BatchSize, Criterion, Throughput};
use std::hint::black_box;

use eastwalk_core::graphical::EventSchedule;
use eastwalk_core::{EnvKind, EnvParams, JointProcess, Topology};

fn cursor(c: &mut Criterion) {
    let schedule = EventSchedule::new(7, 50.0, 1024, 0.5).unwrap();
    let n = {
        let mut cur = schedule.cursor();
        let mut n = 0u64;
        while cur.next_event().is_some() {
            n += 1;
        }
        n
    };
    let mut g = c.benchmark_group("cursor");
    g.throughput(Throughput::Elements(n));
    g.bench_function("drain_L1024_T50", |b| {
        b.iter(|| {
            let mut cur = schedule.cursor();
            let mut last = 0.0;
            while let Some(ev) = cur.next_event() {
                last = ev.time;
            }
            black_box(last)
        })
    });
    g.finish();
}

fn joint(c: &mut Criterion) {
    let params = EnvParams::new(EnvKind::East, 0.5, Topology::Ring(256)).unwrap();
    let mut g = c.benchmark_group("joint");
    g.sample_size(20);
    g.bench_function("east_L256_T100", |b| {
        b.iter_batched(
            || JointProcess::new(&params, 0.3, 100.0, 11, None).unwrap(),
            |mut p| {
                p.run_until(100.0, &mut ());
                black_box(p.state().position())
            },
            BatchSize::LargeInput,
        )
    });
    g.finish();
}

criterion_group!(benches, cursor, joint);
criterion_main!(benches);
