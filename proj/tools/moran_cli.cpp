// Command-line front end: moran <simulate|limit|balance|sweep|oracle>
//   --config PATH   run configuration (JSON)
//   --out DIR       output directory (overrides config)
//   --seed N        seed override (overrides config)

#include <CLI11.hpp>

#include "moran/cli.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Moran-type evolution chains with exchangeable breeding: "
                 "stationary sampling, exact small-instance laws, and "
                 "large-population limit checks"};
    app.require_subcommand(1);

    moran::cli::CliOptions opt;
    std::string config_path;
    std::string out_dir;
    std::uint64_t seed = 0;

    for (const char* name : {"simulate", "limit", "balance", "sweep", "oracle"}) {
        auto* sub = app.add_subcommand(name);
        sub->add_option("--config", config_path, "run configuration (JSON)")->required();
        auto* out = sub->add_option("--out", out_dir, "output directory");
        auto* sd = sub->add_option("--seed", seed, "seed override");
        sub->callback([&, name, out, sd] {
            opt.command = name;
            opt.config_path = config_path;
            if (out->count() > 0) opt.out_dir = out_dir;
            if (sd->count() > 0) opt.seed = seed;
        });
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 2;
    }
    return moran::cli::run(opt);
}
