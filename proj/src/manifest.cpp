/*
* organloc - regression forest organ localization and atlas segmentation.
*
* Copyright 2026 The organloc Authors
*
* Licensed under the Apache License, Version 2.0 (the "License");
* you may not use this file except in compliance with the License.
* You may obtain a copy of the License at
*
*     http://www.apache.org/licenses/LICENSE-2.0
*
* Unless required by applicable law or agreed to in writing, software
* distributed under the License is distributed on an "AS IS" BASIS,
* WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
* See the License for the specific language governing permissions and
* limitations under the License.
*/

#include "organloc/manifest.hpp"

#include "organloc/rng.hpp"
#include "organloc/volume_io.hpp"

#include <fstream>
#include <sstream>

namespace organloc {

namespace fs = std::filesystem;

Manifest Manifest::load(const fs::path& path)
{
  std::ifstream in(path);
  if (!in)
    throw IoError("cannot open manifest " + path.string());
  Manifest m;
  m.base_dir = path.parent_path();
  std::string line;
  int lineno = 0;
  while (std::getline(in, line))
  {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos || line[line.find_first_not_of(" \t")] == '#')
      continue;
    std::istringstream ls(line);
    ManifestEntry e;
    std::string ct, deep, lik, mask, box, extra;
    if (!(ls >> e.id >> ct >> deep >> lik >> mask >> box) || (ls >> extra))
      throw FormatError("manifest line " + std::to_string(lineno) + ": expected 'id ct feat lik mask box'");
    e.ct = ct;
    e.deep = deep == "-" ? fs::path() : fs::path(deep);
    e.likelihood = lik == "-" ? fs::path() : fs::path(lik);
    e.mask = mask;
    e.box = box;
    m.entries.push_back(std::move(e));
  }
  return m;
}

void Manifest::save(const fs::path& path) const
{
  std::ofstream out(path);
  if (!out)
    throw IoError("cannot write manifest " + path.string());
  out << "# id ct feat lik mask box\n";
  auto p = [](const fs::path& x) { return x.empty() ? std::string("-") : x.generic_string(); };
  for (const auto& e : entries)
    out << e.id << ' ' << p(e.ct) << ' ' << p(e.deep) << ' ' << p(e.likelihood) << ' ' << p(e.mask) << ' '
        << p(e.box) << '\n';
}

BoundingBox load_box(const fs::path& path)
{
  std::ifstream in(path);
  if (!in)
    throw IoError("cannot open box file " + path.string());
  const auto boxes = read_boxes(in);
  if (boxes.empty())
    throw FormatError("box file has no boxes: " + path.string());
  return boxes.front();
}

void save_boxes(const fs::path& path, const std::vector<BoundingBox>& boxes)
{
  std::ofstream out(path);
  if (!out)
    throw IoError("cannot write box file " + path.string());
  write_boxes(out, boxes);
}

CaseData load_case(const Manifest& manifest, const ManifestEntry& e)
{
  auto resolve = [&](const fs::path& p) { return p.is_absolute() ? p : manifest.base_dir / p; };
  CaseData c;
  c.id = e.id;
  c.ct = load_volume_as<float>(resolve(e.ct));
  if (!e.deep.empty())
    c.deep = load_volume_as<float>(resolve(e.deep));
  if (!e.likelihood.empty())
    c.likelihood = load_volume_as<float>(resolve(e.likelihood));
  c.mask = select_label(load_volume_as<std::uint8_t>(resolve(e.mask)), std::uint8_t(1));
  c.box = load_box(resolve(e.box));
  if (c.mask.dims() != c.ct.dims())
    throw ValidationError("case " + e.id + ": mask and CT dims differ");
  return c;
}

std::vector<CaseData> load_cases(const Manifest& manifest)
{
  std::vector<CaseData> cases;
  for (const auto& e : manifest.entries)
    cases.push_back(load_case(manifest, e));
  return cases;
}

Manifest write_phantom_dataset(const DatasetParams& params, const fs::path& out_dir)
{
  fs::create_directories(out_dir);
  Manifest m;
  m.base_dir = out_dir;
  for (int i = 0; i < params.count; ++i)
  {
    const std::uint64_t seed = derive_seed(params.seed, std::uint64_t(i));
    const Phantom ph = generate_phantom(random_phantom_config(params.phantom, seed));
    char id[32];
    std::snprintf(id, sizeof id, "case_%03d", i);
    const fs::path dir = out_dir / id;
    fs::create_directories(dir);

    ManifestEntry e;
    e.id = id;
    e.ct = fs::path(id) / "ct.volf";
    e.mask = fs::path(id) / "mask.volf";
    e.box = fs::path(id) / "box.txt";
    e.likelihood = fs::path(id) / "lik.volf";
    save_volume(out_dir / e.ct, ph.ct);
    save_volume(out_dir / e.mask, ph.labels);
    save_boxes(out_dir / e.box, ph.boxes);
    if (params.channels > 0)
    {
      e.deep = fs::path(id) / "feat.volf";
      save_volume(out_dir / e.deep,
                  synth_feature_volume(ph.labels, params.channels, derive_seed(seed, 10), params.features));
    }
    save_volume(out_dir / e.likelihood, synth_likelihood_volume(ph.labels, derive_seed(seed, 11), params.features));
    m.entries.push_back(e);
  }
  m.save(out_dir / "manifest.txt");
  return m;
}

} // namespace organloc
