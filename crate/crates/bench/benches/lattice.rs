use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use flat_bench::corpus;
use flat_core::lexicon::{match_words, recover};
use flat_core::position::distances;
use flat_core::{FlatLattice, Trie};

fn lattice(c: &mut Criterion) {
    let corpus = corpus(200, 1);
    let trie = Trie::build(&corpus.lexicon).unwrap();
    let sentences: Vec<&[char]> = corpus.sentences.iter().map(|s| s.chars.as_slice()).collect();
    let flats: Vec<FlatLattice> = sentences.iter().map(|s| FlatLattice::from_sentence(s, &trie)).collect();

    let mut g = c.benchmark_group("lattice");
    g.bench_function(BenchmarkId::new("match_words", sentences.len()), |b| {
        b.iter(|| sentences.iter().map(|s| match_words(s, &trie).len()).sum::<usize>())
    });
    g.bench_function(BenchmarkId::new("flatten", sentences.len()), |b| {
        b.iter(|| sentences.iter().map(|s| FlatLattice::from_sentence(s, &trie).n_spans()).sum::<usize>())
    });
    g.bench_function(BenchmarkId::new("recover", flats.len()), |b| {
        b.iter(|| flats.iter().map(|f| recover(f).unwrap().n_chars()).sum::<usize>())
    });
    g.bench_function(BenchmarkId::new("distances", flats.len()), |b| {
        b.iter(|| flats.iter().map(|f| distances(f).n_spans()).sum::<usize>())
    });
    g.finish();
}

criterion_group!(benches, lattice);
criterion_main!(benches);
