#include <math.h>
#include <stdio.h>
#include "chatterkit.h"

int main(void) {
    double x[64], y[64];
    for (int i = 0; i < 64; i++) {
        x[i] = sin(0.3 * i);
        y[i] = sin(0.3 * i + 0.2);
    }
    double d = -1.0;
    if (ck_dtw_distance(x, 64, y, 64, 0.1, 0.0, false, &d) != CK_STATUS_OK || !(d >= 0.0)) {
        return 1;
    }
    double pts[40];
    for (int i = 0; i < 20; i++) {
        pts[2 * i] = cos(6.283185307179586 * i / 20);
        pts[2 * i + 1] = sin(6.283185307179586 * i / 20);
    }
    CkDiagram *dg = NULL;
    if (ck_persistence_h1(pts, 20, 2, 0, 0, &dg) != CK_STATUS_OK || ck_diagram_len(dg) != 1) {
        return 2;
    }
    ck_diagram_free(dg);
    if (ck_dtw_distance(NULL, 3, y, 64, 0.1, 0.0, false, &d) != CK_STATUS_NULL_POINTER) {
        return 3;
    }
    char msg[64];
    if (ck_last_error(msg, sizeof msg) == 0) {
        return 4;
    }
    printf("ok %s %s\n", ck_version(), msg);
    return 0;
}
