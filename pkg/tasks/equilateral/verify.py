import json
import logging

from eval.certify import verify_certificate
from modules.equilateral.certificate import load_certificate
from modules.equilateral.subspace import load_spec
from tasks.equilateral.base import EXIT_OK, EXIT_VERIFICATION, EquilateralTask

logger = logging.getLogger(__name__)


class VerifyTask(EquilateralTask):
    command = 'verify'

    def run(self):
        cert = load_certificate(self.config.input)
        spec = load_spec(self.args.spec) if self.args.spec else None
        report = verify_certificate(cert, spec)
        print(json.dumps(report.to_json(), sort_keys=True))
        if not report.ok:
            for failure in report.failures[:10]:
                logger.error(f'| {failure}')
            return EXIT_VERIFICATION
        logger.info(f'| {self.config.input}: {report.size} points, {report.checked_pairs} pairs, '
                    f'{report.checked_records} stability records verified')
        return EXIT_OK
