// Writes a procedurally generated tone-burst corpus with word alignments.

#include <iostream>

#include <CLI11.hpp>

#include "convsim/error.hpp"
#include "convsim/synthetic.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Generate a synthetic source corpus"};
  std::string out;
  convsim::SyntheticCorpusSpec spec;
  app.add_option("--out", out, "Output directory")->required();
  app.add_option("--speakers", spec.num_speakers)->check(CLI::PositiveNumber);
  app.add_option("--utterances", spec.utterances_per_speaker, "Utterances per speaker")
      ->check(CLI::PositiveNumber);
  app.add_option("--words", spec.words_per_utterance, "Words per utterance")
      ->check(CLI::PositiveNumber);
  app.add_option("--sample-rate", spec.sample_rate);
  app.add_option("--seed", spec.seed);
  CLI11_PARSE(app, argc, argv);
  try {
    std::cout << convsim::write_synthetic_corpus(out, spec).string() << '\n';
  } catch (const convsim::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
