// End-to-end smoke checks of the command-line surface. Takes the binary
// path as argv[1]; returns nonzero on the first failed check.
#include <sys/wait.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

namespace fs = std::filesystem;

namespace {

int checks_failed = 0;

void expect(bool ok, const std::string& what) {
  if (!ok) {
    std::cerr << "FAILED: " << what << "\n";
    ++checks_failed;
  }
}

int run(const std::string& command) {
  const int status = std::system(command.c_str());
  if (status == -1) return -1;
  if (WIFEXITED(status)) return WEXITSTATUS(status);
  return -2;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

}  // namespace

int main(int argc, char** argv) {
  if (argc < 2) {
    std::cerr << "usage: cli_smoke <imagedpo binary>\n";
    return 2;
  }
  const std::string cli = argv[1];
  const fs::path work = fs::temp_directory_path() / "imagedpo_cli_smoke";
  fs::remove_all(work);
  fs::create_directories(work);
  const std::string w = work.string();
  const std::string quiet = " > " + w + "/stdout.txt 2> " + w + "/stderr.txt";

  expect(run(cli + " --help" + quiet) == 0, "--help exits 0");
  expect(run(cli + " gen --help" + quiet) == 0, "gen --help exits 0");
  expect(run(cli + " definitely-not-a-command" + quiet) == 1, "unknown subcommand exits 1");

  // deterministic generation: byte-identical outputs for the same seed
  expect(run(cli + " gen --seed 5 --scenes 12 --out " + w + "/w1" + quiet) == 0, "gen run 1");
  expect(run(cli + " gen --seed 5 --scenes 12 --out " + w + "/w2" + quiet) == 0, "gen run 2");
  expect(slurp(work / "w1/triplets.jsonl") == slurp(work / "w2/triplets.jsonl"),
         "gen triplets byte-identical");
  expect(slurp(work / "w1/benchmark.jsonl") == slurp(work / "w2/benchmark.jsonl"),
         "gen benchmark byte-identical");
  expect(slurp(work / "w1/images/t000003.pgm") == slurp(work / "w2/images/t000003.pgm"),
         "gen images byte-identical");

  // corrupt: pixelate level 1 is the identity
  const std::string img = (work / "w1/images/t000000.pgm").string();
  expect(run(cli + " corrupt --kind pixelate --level 1 --in " + img + " --out " + w +
             "/ident.pgm" + quiet) == 0,
         "corrupt identity runs");
  expect(slurp(img) == slurp(work / "ident.pgm"), "pixelate level 1 is bit-identical");
  expect(run(cli + " corrupt --kind blur --level 4 --in " + img + " --out " + w + "/x.pgm" +
             quiet) == 1,
         "even blur kernel exits 1");
  expect(run(cli + " corrupt --kind nonsense --level 3 --in " + img + " --out " + w + "/x.pgm" +
             quiet) == 1,
         "unknown corruption kind exits 1");

  // eval: mismatched prediction ids exit 1 and the message names them
  {
    std::ofstream preds(work / "preds.jsonl");
    preds << R"({"id":"t000000","response":"disc"})" << "\n";
  }
  const int eval_code = run(cli + " eval --bench " + w + "/w1/benchmark.jsonl --preds " + w +
                            "/preds.jsonl --setting F" + quiet);
  expect(eval_code == 1, "eval with missing prediction ids exits 1");
  const std::string err = slurp(work / "stderr.txt");
  expect(err.find("missing predictions") != std::string::npos &&
             err.find("t0000") != std::string::npos,
         "eval error lists missing ids");

  // ... but --allow-missing scores them as instruction failures
  expect(run(cli + " eval --bench " + w + "/w1/benchmark.jsonl --preds " + w +
             "/preds.jsonl --setting F --allow-missing --out " + w + "/report.json" + quiet) == 0,
         "eval --allow-missing exits 0");
  expect(slurp(work / "report.json").find("\"setting\": \"F\"") != std::string::npos,
         "eval report labels the setting");

  // unknown config keys are rejected
  {
    std::ofstream cfg(work / "bad.json");
    cfg << R"({"train":{"learnin_rate":0.5}})" << "\n";
  }
  expect(run(cli + " pretrain --config " + w + "/bad.json --triplets " + w +
             "/w1/triplets.jsonl --out " + w + "/pre" + quiet) == 1,
         "unknown config key exits 1");
  expect(slurp(work / "stderr.txt").find("learnin_rate") != std::string::npos,
         "config error names the key");

  // a tiny pretrain -> eval --params round trip
  {
    std::ofstream cfg(work / "mle.json");
    cfg << R"({"train":{"objective":"mle_pretrain","learning_rate":0.5,"epochs":40,)"
        << R"("batch_size":64,"seed":5}})" << "\n";
  }
  expect(run(cli + " pretrain --config " + w + "/mle.json --triplets " + w +
             "/w1/triplets.jsonl --out " + w + "/pre" + quiet) == 0,
         "pretrain runs");
  expect(fs::exists(work / "pre/params.bin") && fs::exists(work / "pre/params.bin.json") &&
             fs::exists(work / "pre/history.csv") && fs::exists(work / "pre/run_meta.json"),
         "pretrain writes params, history, and metadata");
  expect(run(cli + " eval --bench " + w + "/w1/benchmark.jsonl --params " + w +
             "/pre/params.bin --setting F" + quiet) == 0,
         "eval --params runs");

  // pairs + train round trip
  {
    std::ofstream spec(work / "spec.json");
    spec << R"([{"kind":"blur","kernel_size":9},{"kind":"semantic","fill":"noise"}])" << "\n";
  }
  expect(run(cli + " pairs --mode image --in " + w + "/w1/triplets.jsonl --spec " + w +
             "/spec.json --out " + w + "/w1 --seed 7" + quiet) == 0,
         "pairs runs");
  {
    std::ofstream cfg(work / "dpo.json");
    cfg << R"({"train":{"objective":"image_dpo","alpha_or_beta":8,"learning_rate":0.05,)"
        << R"("epochs":5,"batch_size":64,"seed":9}})" << "\n";
  }
  expect(run(cli + " train --objective image_dpo --config " + w + "/dpo.json --pairs " + w +
             "/w1/pairs_image.jsonl --ref " + w + "/pre/params.bin --out " + w + "/dpo" +
             quiet) == 0,
         "train runs");
  expect(fs::exists(work / "dpo/params.bin"), "train writes params");

  // sweep over the trained model
  expect(run(cli + " sweep --kind blur --levels 1,3,7 --params " + w +
             "/dpo/params.bin --bench " + w + "/w1/benchmark.jsonl --out " + w + "/sweep" +
             quiet) == 0,
         "sweep runs");
  expect(fs::exists(work / "sweep/sweep.csv") && fs::exists(work / "sweep/sweep.json"),
         "sweep writes csv and verdict");

  // verification commands
  expect(run(cli + " verify-bound --instances 50 --beta-list 0.5,2 --seed 1" + quiet) == 0,
         "verify-bound exits 0");
  expect(run(cli + " gradcheck --objective mle --trials 2 --seed 4" + quiet) == 0,
         "gradcheck exits 0");

  // text pairs, both modes
  expect(run(cli + " pairs --mode text --in " + w + "/w1/triplets.jsonl --out " + w +
             "/w1 --seed 8 --negative-mode hard --ref " + w + "/pre/params.bin" + quiet) == 0,
         "hard-negative text pairs run");
  expect(run(cli + " pairs --mode text-corrupted --in " + w + "/w1/triplets.jsonl --spec " + w +
             "/spec.json --out " + w + "/w1 --seed 8" + quiet) == 0,
         "corrupted text pairs run");

  if (checks_failed == 0) {
    std::cout << "cli_smoke: all checks passed\n";
    return 0;
  }
  std::cerr << "cli_smoke: " << checks_failed << " checks failed\n";
  return 1;
}
