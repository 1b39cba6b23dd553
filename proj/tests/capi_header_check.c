/* Compile-only guard: the public header must stay valid C. */
#include <kbm/kbm.h>

int kbm_header_check_link_probe(void) {
    kbm_forward_config fwd;
    kbm_inverse_config inv;
    kbm_path_config paths;
    kbm_pricing_config pricing;
    kbm_forward_config_default(&fwd);
    kbm_inverse_config_default(&inv);
    kbm_path_config_default(&paths);
    kbm_pricing_config_default(&pricing);
    return fwd.rannacher_steps + inv.max_iterations + (int)paths.n_paths +
           pricing.payoff_kind;
}
