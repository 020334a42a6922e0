#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <sstream>

#include <json.hpp>
#include <unistd.h>

#include "nst/cli.hpp"
#include "nst/config.hpp"
#include "nst/image.hpp"

using namespace nst;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Outcome {
  int code = 0;
  std::string out;
  std::string err;
};

Outcome run(const std::vector<std::string>& args) {
  std::ostringstream out;
  std::ostringstream err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// Drops the wall-clock column so traces of identical runs can be compared.
std::string without_millis(const std::string& csv) {
  std::istringstream in(csv);
  std::string line;
  std::string out;
  while (std::getline(in, line)) {
    if (!line.empty() && line[0] != '#') line = line.substr(0, line.rfind(','));
    out += line + '\n';
  }
  return out;
}

RgbImage pattern(std::size_t w, std::size_t h, int phase) {
  RgbImage img(w, h);
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      for (std::size_t c = 0; c < 3; ++c) {
        img.at(x, y, c) = static_cast<std::uint8_t>((x * (7 + c) + y * (3 + phase) + 40 * c + 60 * phase) % 256);
      }
    }
  }
  return img;
}

struct Workspace {
  fs::path dir;
  std::string weights;
  std::string content;
  std::string style;

  Workspace() : dir(fs::temp_directory_path() / ("nst_cli_" + std::to_string(::getpid()))) {
    fs::create_directories(dir);
    weights = (dir / "w.vgwt").string();
    content = (dir / "content.png").string();
    style = (dir / "style.png").string();
    write_png(pattern(16, 16, 0), content);
    write_png(pattern(16, 16, 1), style);
    REQUIRE(run({"fixture", "--out", weights, "--seed", "3"}).code == 0);
  }
  ~Workspace() { fs::remove_all(dir); }
  std::string path(const std::string& name) const { return (dir / name).string(); }
};

Workspace& ws() {
  static Workspace w;
  return w;
}

}  // namespace

TEST_CASE("usage errors exit 2") {
  auto& w = ws();
  CHECK(run({}).code == 2);
  CHECK(run({"paint"}).code == 2);
  const auto ix = run({"transfer", "--content", w.content, "--style", w.style, "--preset", "IX", "--weights",
                       w.weights, "--out", w.path("ix.png")});
  CHECK(ix.code == 2);
  CHECK(ix.err.find("I, II, III, IV, V, VI, VII, VIII") != std::string::npos);
  CHECK(run({"texture", "--weights", w.weights, "--out", w.path("t.png")}).code == 2);
  CHECK(run({"transfer", "--content", w.content, "--style", w.style, "--weights", w.weights, "--out",
             w.path("x.png"), "--pooling", "median"})
            .code == 2);
  const fs::path cfg = w.path("cfg.json");
  std::ofstream(cfg) << config_to_json(preset("V"));
  CHECK(run({"transfer", "--content", w.content, "--style", w.style, "--weights", w.weights, "--out",
             w.path("x.png"), "--preset", "V", "--config", cfg.string()})
            .code == 2);
  CHECK(run({"superres", "--content", w.content, "--style", w.style, "--weights", w.weights, "--out",
             w.path("sr.png"), "--schedule", "16,8"})
            .code == 2);
  CHECK(run({"superres", "--content", w.content, "--style", w.style, "--weights", w.weights, "--out",
             w.path("sr.png"), "--schedule", "8,12"})
            .code == 2);
}

TEST_CASE("runtime failures exit 1 with a diagnostic") {
  auto& w = ws();
  const std::string missing = w.path("nowhere.vgwt");
  const auto r = run({"transfer", "--content", w.content, "--style", w.style, "--preset", "V", "--weights", missing,
                      "--out", w.path("o.png")});
  CHECK(r.code == 1);
  CHECK(r.err.find(missing) != std::string::npos);

  const std::string corrupt = w.path("corrupt.vgwt");
  std::ofstream(corrupt) << "VGWTgarbage";
  const auto c = run({"inspect", "--weights", corrupt});
  CHECK(c.code == 1);
  CHECK(c.err.find("corrupt.vgwt") != std::string::npos);
}

TEST_CASE("inspect lists the conv layers and scale table") {
  auto& w = ws();
  const auto text = run({"inspect", "--weights", w.weights});
  CHECK(text.code == 0);
  CHECK(text.out.find("16 conv layers") != std::string::npos);
  CHECK(text.out.find("pool5  scale 32") != std::string::npos);
  const auto js = run({"inspect", "--weights", w.weights, "--json"});
  REQUIRE(js.code == 0);
  const json doc = json::parse(js.out);
  CHECK(doc["conv_layers"] == 16);
  CHECK(doc["layers"].size() == 21);
  CHECK(doc["layers"][20]["feature_scale"] == 32);
  CHECK(doc["layers"][0]["shape"] == json::array({64, 3, 3, 3}));
}

TEST_CASE("transfer writes the image, trace and reproducibility stanza; reruns are identical") {
  auto& w = ws();
  const std::vector<std::string> base{"transfer", "--content", w.content, "--style", w.style, "--preset", "V",
                                      "--weights", w.weights, "--seed", "7", "--iters", "6"};
  auto args = base;
  args.insert(args.end(), {"--out", w.path("o.png")});
  const auto r = run(args);
  REQUIRE(r.code == 0);
  CHECK(fs::exists(w.path("o.png")));
  const std::string trace = slurp(w.path("o.trace.csv"));
  CHECK(trace.find("# seed=7") != std::string::npos);
  CHECK(trace.find("# preset=V") != std::string::npos);
  CHECK(trace.find("# config_hash=") != std::string::npos);
  CHECK(trace.find("# weights_hash=" + fnv1a_hex(slurp(w.weights))) != std::string::npos);
  CHECK(trace.find("# engine=") != std::string::npos);
  CHECK(trace.find("iter,loss,content_loss,style_loss,grad_norm,step,millis") != std::string::npos);
  CHECK(json::parse(r.out)["output"] == w.path("o.png"));

  auto again = base;
  again.insert(again.end(), {"--out", w.path("o2.png")});
  REQUIRE(run(again).code == 0);
  CHECK(slurp(w.path("o.png")) == slurp(w.path("o2.png")));
  CHECK(without_millis(trace) == without_millis(slurp(w.path("o2.trace.csv"))));
}

TEST_CASE("flags override the config file, which overrides its preset") {
  auto& w = ws();
  const fs::path cfg = w.path("layered.json");
  std::ofstream(cfg) << R"({"preset": "IV", "lambda": 5, "optimizer": {"max_iters": 4}, "seed": 2})";
  const auto r = run({"transfer", "--content", w.content, "--style", w.style, "--config", cfg.string(), "--weights",
                      w.weights, "--out", w.path("layered.png"), "--iters", "3"});
  REQUIRE(r.code == 0);
  const json c = json::parse(r.out)["config"];
  CHECK(c["lambda"] == 5.0);
  CHECK(c["optimizer"]["max_iters"] == 3);
  CHECK(c["seed"] == 2);
  CHECK(c["content_layers"] == json::array({"conv5_2"}));
  CHECK(c["align"]["enabled"] == false);
}

TEST_CASE("texture honours --size") {
  auto& w = ws();
  const auto r = run({"texture", "--style", w.style, "--weights", w.weights, "--out", w.path("tex.png"), "--size",
                      "24", "--iters", "3"});
  REQUIRE(r.code == 0);
  const RgbImage img = read_png(w.path("tex.png"));
  CHECK(img.long_edge() == 24);
}

TEST_CASE("superres writes every stage and K = 0 equals transfer") {
  auto& w = ws();
  const std::string big_style = w.path("style32.png");
  write_png(pattern(32, 32, 1), big_style);
  const auto r = run({"superres", "--content", w.content, "--style", big_style, "--weights", w.weights, "--out",
                      w.path("sr/final.png"), "--schedule", "16,32", "--iters", "3"});
  REQUIRE(r.code == 0);
  CHECK(fs::exists(w.path("sr/stage_0.png")));
  CHECK(fs::exists(w.path("sr/stage_1.png")));
  CHECK(fs::exists(w.path("sr/stage_1.trace.csv")));
  CHECK(read_png(w.path("sr/final.png")).width == 32);

  const std::vector<std::string> common{"--content", w.content, "--style", w.style, "--weights", w.weights,
                                        "--seed", "5", "--iters", "4"};
  auto sr = common;
  sr.insert(sr.begin(), "superres");
  sr.insert(sr.end(), {"--schedule", "16", "--out", w.path("k0/sr.png")});
  auto tr = common;
  tr.insert(tr.begin(), "transfer");
  tr.insert(tr.end(), {"--size", "16", "--out", w.path("k0_transfer.png")});
  REQUIRE(run(sr).code == 0);
  REQUIRE(run(tr).code == 0);
  CHECK(slurp(w.path("k0/sr.png")) == slurp(w.path("k0_transfer.png")));
}

TEST_CASE("parts split and merge") {
  auto& w = ws();
  const std::string manifest = w.path("m.json");
  std::ofstream(manifest) << R"({"canvas":[16,16],"parts":[
    {"name":"top","content_rect":[0,0,16,10],"style_rect":[0,0,16,10],"overlap_margin":4},
    {"name":"bottom","content_rect":[0,6,16,10],"style_rect":[0,6,16,10],"overlap_margin":4}]})";
  const std::string dir = w.path("parts");
  REQUIRE(run({"parts", "split", "--manifest", manifest, "--content", w.content, "--dir", dir}).code == 0);
  CHECK(fs::exists(dir + "/top.content.png"));
  const auto merged = run({"parts", "merge", "--manifest", manifest, "--content", w.content, "--dir", dir,
                           "--suffix", ".content.png", "--out", w.path("merged.png")});
  REQUIRE(merged.code == 0);
  CHECK(read_png(w.path("merged.png")) == read_png(w.content));

  fs::remove(dir + "/bottom.content.png");
  const auto gone = run({"parts", "merge", "--manifest", manifest, "--content", w.content, "--dir", dir, "--suffix",
                         ".content.png", "--out", w.path("merged2.png")});
  CHECK(gone.code == 1);
  CHECK(gone.err.find("bottom") != std::string::npos);

  const std::string bad = w.path("bad.json");
  std::ofstream(bad) << R"({"canvas":[16,16],"parts":[
    {"name":"overhang","content_rect":[8,0,16,16],"style_rect":[0,0,8,8],"overlap_margin":0}]})";
  const auto oob = run({"parts", "split", "--manifest", bad, "--content", w.content, "--dir", dir});
  CHECK(oob.code == 1);
  CHECK(oob.err.find("overhang") != std::string::npos);

  const auto synth = run({"parts", "synth", "--manifest", manifest, "--content", w.content, "--style", w.style,
                          "--weights", w.weights, "--dir", w.path("synth"), "--iters", "2", "--jobs", "2", "--out",
                          w.path("synth.png")});
  CHECK(synth.code == 0);
  CHECK(fs::exists(w.path("synth/top.result.png")));
  CHECK(fs::exists(w.path("synth.png")));
}

TEST_CASE("gradcheck exit codes and reproducibility") {
  const auto a = run({"gradcheck", "--seed", "4"});
  CHECK(a.code == 0);
  CHECK(a.out == run({"gradcheck", "--seed", "4"}).out);
  const auto huge = run({"gradcheck", "--perturb", "10"});
  CHECK(huge.code != 0);
}

TEST_CASE("the installed binary reports the same exit codes") {
  auto& w = ws();
  const std::string bin = NST_CLI_PATH;
  CHECK(WEXITSTATUS(std::system((bin + " inspect --weights " + w.weights + " > /dev/null").c_str())) == 0);
  CHECK(WEXITSTATUS(std::system((bin + " inspect > /dev/null 2>&1").c_str())) == 2);
  CHECK(WEXITSTATUS(std::system((bin + " inspect --weights " + w.path("none.vgwt") + " 2> /dev/null").c_str())) == 1);
}
