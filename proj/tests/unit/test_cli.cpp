// Copyright 2026 The EMR4D Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <sys/wait.h>
#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>

#include "doctest.h"
#include "emr4d/image_io.hpp"

namespace fs = std::filesystem;

namespace {

struct Workdir {
  fs::path dir = fs::temp_directory_path() / ("emr4d_cli_" + std::to_string(::getpid()));
  Workdir() { fs::create_directories(dir); }
  ~Workdir() { fs::remove_all(dir); }
  std::string operator/(const std::string& name) const { return (dir / name).string(); }
};

int run(const std::string& args) {
  const std::string cmd = std::string(EMR4D_CLI) + " " + args + " >/dev/null 2>&1";
  const int rc = std::system(cmd.c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void poke(const std::string& path, std::size_t offset, char value) {
  std::fstream f(path, std::ios::binary | std::ios::in | std::ios::out);
  f.seekp(static_cast<std::streamoff>(offset));
  f.put(value);
}

}  // namespace

TEST_CASE("command-line pipeline") {
  Workdir w;
  const std::string geo = " -m 4 -n 4";
  REQUIRE(run("synth -o " + (w / "a.png") + " -m 4 -n 4 --seed 7 --truth " + (w / "t.json")) == 0);
  REQUIRE(run("synth -o " + (w / "b.png") + " -m 4 -n 4 --seed 7") == 0);
  CHECK(slurp(w / "a.png") == slurp(w / "b.png"));
  CHECK(slurp(w / "t.json").find("col_offsets") != std::string::npos);

  const std::string enc = "encode -i " + (w / "a.png") + geo + " --interval 3 --lambda 300";
  REQUIRE(run(enc + " -o " + (w / "a.emr4d") + " --stats " + (w / "s.json") + " --dump-key-eia " + (w / "k0.png")) == 0);
  REQUIRE(run(enc + " -o " + (w / "b.emr4d") + " --threads 2") == 0);
  CHECK(slurp(w / "a.emr4d") == slurp(w / "b.emr4d"));
  CHECK(slurp(w / "s.json").find("\"bpp\"") != std::string::npos);

  REQUIRE(run("decode -i " + (w / "a.emr4d") + " -o " + (w / "d.png") + " --dump-key-eia " + (w / "k1.png") +
              " --dump-regressed " + (w / "r.png")) == 0);
  CHECK(slurp(w / "k0.png") == slurp(w / "k1.png"));
  CHECK(emr4d::read_image(w / "d.png").width == 300);

  CHECK(run("metrics -r " + (w / "a.png") + " -d " + (w / "a.png") + geo + " -o " + (w / "m.json")) == 0);
  CHECK(slurp(w / "m.json").find("\"inf\"") != std::string::npos);
  CHECK(run("metrics -r " + (w / "a.png") + " -d " + (w / "k0.png") + geo) == 1);
  CHECK(run("inspect -i " + (w / "a.emr4d") + " -o " + (w / "i.json")) == 0);
  CHECK(slurp(w / "i.json").find("CHNY") != std::string::npos);

  REQUIRE(run("synth -o " + (w / "g.png") + " -m 16 -n 20 --ei-size 20 --parallax-x 2 --parallax-y 2") == 0);
  REQUIRE(run("render -i " + (w / "g.png") + " -o " + (w / "v.png") + " -m 16 -n 20 --ei-size 20") == 0);
  const auto view = emr4d::read_image(w / "v.png");
  CHECK(view.width == 160);
  CHECK(view.height == 128);

  fs::copy_file(w / "a.emr4d", w / "magic.emr4d");
  poke(w / "magic.emr4d", 0, 'Z');
  CHECK(run("decode -i " + (w / "magic.emr4d") + " -o " + (w / "x.png")) == 2);
  fs::copy_file(w / "a.emr4d", w / "crc.emr4d");
  poke(w / "crc.emr4d", fs::file_size(w / "a.emr4d") - 1, '\x5a');
  CHECK(run("decode -i " + (w / "crc.emr4d") + " -o " + (w / "x.png")) == 3);
  fs::resize_file(w / "magic.emr4d", 0);
  fs::copy_file(w / "a.emr4d", w / "short.emr4d");
  fs::resize_file(w / "short.emr4d", 40);
  CHECK(run("decode -i " + (w / "short.emr4d") + " -o " + (w / "x.png")) == 2);
}

TEST_CASE("command-line usage errors") {
  Workdir w;
  REQUIRE(run("synth -o " + (w / "a.png") + " -m 2 -n 2") == 0);
  CHECK(run("") == 1);
  CHECK(run("encode -i " + (w / "a.png") + " -o " + (w / "x") + " -m 2 -n 2 --profile p75 --lambda 3") == 1);
  CHECK(run("encode -i " + (w / "a.png") + " -o " + (w / "x") + " -m 2") == 1);
  CHECK(run("encode -i " + (w / "a.png") + " -o " + (w / "x") + " -m 3 -n 3") == 1);
  CHECK(run("decode -i " + (w / "missing") + " -o " + (w / "x")) == 1);
  CHECK(run("synth -o " + (w / "b.png") + " --texture plaid") == 1);
  CHECK(run("--help") == 0);
}
