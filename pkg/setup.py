from setuptools import setup

from os import path
this_directory = path.abspath(path.dirname(__file__))
with open(path.join(this_directory, 'README.md'), encoding='utf-8') as f:
    long_description = f.read()

setup(
    name='tasepfan',
    version='1.0.0',
    description='Second-class particle simulations for TASEP from shock initial data',
    long_description=long_description,
    long_description_content_type='text/markdown',
    author='the tasepfan developers',
    classifiers=['Programming Language :: Python :: 3',
                 'Operating System :: OS Independent',
                 'License :: OSI Approved :: BSD License',
                 ],
    package_dir={'tasepfan': 'tasepfan'},
    packages=['tasepfan'],
    include_package_data=True,
    python_requires='>=3.9, <4',
    install_requires=['numpy', 'scipy', 'numba', 'matplotlib'],
    entry_points={'console_scripts': ['tasepfan = tasepfan.cli:main']},
)
