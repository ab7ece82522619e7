#include <math.h>
#include <stdio.h>
#include "depthpocs.h"

int main(void) {
    double px[64];
    for (int i = 0; i < 64; i++) px[i] = 128.0;
    DpDepthMap *map = NULL;
    DpDescription *desc = NULL;
    DpDepthMap *dec = NULL;
    double p = 0.0;
    if (dp_map_new(8, 8, px, &map) != DP_STATUS_OK) return 1;
    if (dp_encode_flat(map, 16.0, &desc) != DP_STATUS_OK) return 2;
    if (dp_decode(desc, &dec) != DP_STATUS_OK) return 3;
    if (dp_psnr(dec, map, &p) != DP_STATUS_OK || !isinf(p)) return 4;
    if (dp_encode_flat(map, -1.0, &desc) != DP_STATUS_INVALID_CONFIG) return 5;
    if (dp_last_error_message() == NULL) return 6;
    DpRefineOptions opts = dp_refine_options_default();
    if (opts.first_target != DP_VIEW_RIGHT) return 7;
    dp_description_free(desc);
    dp_map_free(dec);
    dp_map_free(map);
    puts("ok");
    return 0;
}
