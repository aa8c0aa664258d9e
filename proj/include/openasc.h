/* C API for the open-set acoustic scene classification toolkit.
 *
 * All functions return oasc_status unless noted. On OASC_OK the outputs are
 * valid; on error, oasc_last_error() describes what went wrong (thread-local,
 * valid until the next failing call on the same thread).
 */
#ifndef OPENASC_H
#define OPENASC_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum oasc_status {
    OASC_OK = 0,
    OASC_ERR_INTERNAL = 1, /* bug or unmet internal invariant */
    OASC_ERR_INPUT = 2     /* bad file, config, or argument */
} oasc_status;

typedef struct oasc_config oasc_config;

/* Parse a config file. On success *out owns the config; free with
 * oasc_config_free. */
oasc_status oasc_config_load(const char* path, oasc_config** out);

/* Parse config text directly; origin names the source in error messages. */
oasc_status oasc_config_parse(const char* text, const char* origin, oasc_config** out);

void oasc_config_free(oasc_config* cfg);

/* Override one "section.key" entry. */
oasc_status oasc_config_set(oasc_config* cfg, const char* key, const char* value);

/* Copy the value of "section.key" into buf (NUL-terminated, truncated to
 * buf_len). Fails with OASC_ERR_INPUT when the key is absent. */
oasc_status oasc_config_get(const oasc_config* cfg, const char* key, char* buf, size_t buf_len);

/* Identity hash of the content-determining configuration. */
oasc_status oasc_config_fingerprint(const oasc_config* cfg, uint64_t* out);

/* Pipeline stages. Each reads and writes the artifact paths named in the
 * config. Progress lines go to stderr. */
oasc_status oasc_synthesize(const oasc_config* cfg);
oasc_status oasc_featurize(const oasc_config* cfg);
oasc_status oasc_train_classifier(const oasc_config* cfg);
oasc_status oasc_train_autoencoder(const oasc_config* cfg);
oasc_status oasc_fit_openmax(const oasc_config* cfg);

/* backend: "threshold", "openmax", or "c2ae". */
oasc_status oasc_evaluate(const oasc_config* cfg, const char* backend);

typedef struct oasc_decision {
    int unknown;     /* nonzero when rejected as outside the known classes */
    char label[64];  /* class name, or "unknown" */
    double score;    /* back-end unknownness, higher = more likely unknown */
} oasc_decision;

oasc_status oasc_infer(const oasc_config* cfg, const char* backend, const char* wav_path,
                       oasc_decision* out);

/* Message from the last failing call on this thread; never NULL. */
const char* oasc_last_error(void);

const char* oasc_version(void);

#ifdef __cplusplus
}
#endif

#endif /* OPENASC_H */
