#include <stdio.h>
#include <string.h>

#include "geobots.h"

#define CHECK(expr)                                                             \
  do {                                                                          \
    GbStatus s_ = (expr);                                                       \
    if (s_ != GB_STATUS_OK) {                                                   \
      fprintf(stderr, "%s -> %d: %s\n", #expr, s_, gb_last_error_message());    \
      return 1;                                                                 \
    }                                                                           \
  } while (0)

static const char *BUILD =
    "{\"slots\":{\"chassis\":\"chassis-t1\",\"motor\":\"motor-t1\",\"wheel\":\"wheel-t1\","
    "\"gripper\":\"gripper-t1\",\"box-holder\":\"box-holder-t1\",\"battery\":\"battery-t1\"}}";

int main(void) {
  GbLevel *level = NULL;
  CHECK(gb_level_generate(42, "new-york", "easy", &level));

  uint64_t fp = 0;
  CHECK(gb_level_fingerprint(level, &fp));

  char *json = NULL;
  CHECK(gb_level_to_json(level, &json));
  GbLevel *copy = NULL;
  CHECK(gb_level_from_json(json, &copy));
  uint64_t fp2 = 0;
  CHECK(gb_level_fingerprint(copy, &fp2));
  if (fp != fp2) {
    fprintf(stderr, "fingerprint changed across JSON round trip\n");
    return 1;
  }

  bool solvable = false;
  char *report = NULL;
  CHECK(gb_level_validate(copy, &solvable, &report));
  if (!solvable) return 1;

  GbSession *session = NULL;
  CHECK(gb_session_new(level, BUILD, &session));
  char *outcome = NULL;
  CHECK(gb_session_step(session, "W", &outcome));
  if (strstr(outcome, "\"waited\"") == NULL) {
    fprintf(stderr, "unexpected outcome %s\n", outcome);
    return 1;
  }

  if (gb_session_step(session, "jump", &outcome) != GB_STATUS_INVALID_ARGUMENT) return 1;
  if (strlen(gb_last_error_message()) == 0) return 1;

  char *problem = NULL;
  CHECK(gb_repair_generate(7, "hard", &problem));

  printf("%016llx\n", (unsigned long long)fp);
  gb_string_free(json);
  gb_string_free(report);
  gb_string_free(outcome);
  gb_string_free(problem);
  gb_session_free(session);
  gb_level_free(copy);
  gb_level_free(level);
  return 0;
}
