use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use psart_core::analysis::{IterationMatrix, LinearOperator};
use psart_core::materials::LacModel;
use psart_core::phantoms::head_phantom;
use psart_core::projection::{ParallelBeamGeometry, PolyProjector, SystemMatrix};
use psart_core::spectra::Spectrum;

const SIZES: [usize; 2] = [64, 128];

struct Setup {
    a: SystemMatrix,
    image: Vec<f64>,
    sinogram: Vec<f64>,
}

fn setup(n: usize) -> Setup {
    let a = SystemMatrix::parallel_beam(ParallelBeamGeometry::standard(n, 2 * n, 16.0 / n as f64)).unwrap();
    let image = head_phantom(n).unwrap().0;
    let sinogram = a.forward(&image).unwrap().values;
    Setup { a, image, sinogram }
}

/// A worker pool the timed closures run inside.
struct Pool {
    #[cfg(feature = "parallel")]
    inner: rayon::ThreadPool,
}

impl Pool {
    fn run<R: Send>(&self, f: impl FnOnce() -> R + Send) -> R {
        #[cfg(feature = "parallel")]
        return self.inner.install(f);
        #[cfg(not(feature = "parallel"))]
        f()
    }
}

/// Calls `body` once per pool: a single worker thread versus one per core.
/// Without the `parallel` feature there is only the sequential path.
fn with_pools(mut body: impl FnMut(&str, &Pool)) {
    #[cfg(feature = "parallel")]
    {
        let cores = std::thread::available_parallelism().map_or(1, |n| n.get());
        for threads in [1, cores] {
            let inner = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
            body(&format!("{threads}-thread"), &Pool { inner });
            if cores == 1 {
                break;
            }
        }
    }
    #[cfg(not(feature = "parallel"))]
    body("sequential", &Pool {});
}

fn operators(c: &mut Criterion) {
    let model = LacModel::bundled();
    let spectrum = Spectrum::bundled_130kvp();
    let projector = PolyProjector::new(&model, &spectrum).unwrap();
    let mut group = c.benchmark_group("operators");
    group.sample_size(20);
    for n in SIZES {
        let s = setup(n);
        let jf = IterationMatrix::psart(&s.a, &model, &spectrum, &s.image).unwrap();
        with_pools(|label, pool| {
            let mut out = vec![0.0; s.a.n_rows()];
            group.bench_with_input(BenchmarkId::new(format!("forward/{label}"), n), &s, |b, s| {
                b.iter(|| pool.run(|| s.a.forward_into(black_box(&s.image), &mut out)))
            });
            let mut back = vec![0.0; s.a.n_cols()];
            group.bench_with_input(BenchmarkId::new(format!("backproject/{label}"), n), &s, |b, s| {
                b.iter(|| pool.run(|| s.a.backproject_into(black_box(&s.sinogram), &mut back)))
            });
            group.bench_with_input(BenchmarkId::new(format!("poly_project/{label}"), n), &s, |b, s| {
                b.iter(|| pool.run(|| projector.project(&s.a, black_box(&s.image)).unwrap()))
            });
            let mut y = vec![0.0; s.a.n_cols()];
            group.bench_with_input(BenchmarkId::new(format!("jf_apply/{label}"), n), &s, |b, s| {
                b.iter(|| pool.run(|| jf.apply(black_box(&s.image), &mut y)))
            });
        });
    }
    group.finish();
}

fn system_matrix(c: &mut Criterion) {
    let mut group = c.benchmark_group("system_matrix");
    group.sample_size(10);
    with_pools(|label, pool| {
        group.bench_function(BenchmarkId::new(format!("parallel_beam/{label}"), 64), |b| {
            b.iter(|| pool.run(|| SystemMatrix::parallel_beam(ParallelBeamGeometry::standard(64, 128, 0.25)).unwrap()))
        });
    });
    group.finish();
}

criterion_group!(benches, operators, system_matrix);
criterion_main!(benches);
